// Copyright 2026 The sigma-bridge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sigma/insec/modbus_client.hpp"

#include <array>
#include <chrono>

namespace sigma::insec {

ModbusClient ModbusClient::connect(const net::Endpoint& to, net::Millis timeout) {
  auto socket = net::connect_tcp(to, timeout);
  socket.set_nodelay();
  socket.set_io_timeout(timeout);
  return ModbusClient(std::make_unique<net::PlainStream>(std::move(socket)), timeout);
}

ModbusClient::ReadResult ModbusClient::read(std::uint8_t unit, std::uint16_t start, std::uint16_t quantity) {
  const std::uint16_t txn = next_txn_++;
  stream_->write_all(modbus::encode_read_request(txn, unit, {start, quantity}));

  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::array<std::uint8_t, 512> chunk{};
  for (;;) {
    const auto decoded = modbus::decode_response(buffer_);
    if (!std::holds_alternative<modbus::NeedMoreBytes>(decoded)) {
      if (const auto* bad = std::get_if<modbus::ProtocolViolation>(&decoded)) throw ProtocolError(bad->reason);
      const auto size = std::get<std::size_t>(modbus::frame_size(buffer_));
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(size));
      if (const auto* ex = std::get_if<modbus::ExceptionResponse>(&decoded)) {
        if (ex->transaction_id != txn) throw ProtocolError("transaction id mismatch");
        return *ex;
      }
      const auto& resp = std::get<modbus::ReadHoldingRegsResponse>(decoded);
      if (resp.transaction_id != txn) throw ProtocolError("transaction id mismatch");
      if (resp.registers.size() != quantity) throw ProtocolError("register count does not match the request");
      return resp.registers;
    }
    const auto left = std::chrono::duration_cast<net::Millis>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw IoError("modbus response timed out");
    const std::size_t n = stream_->read_some(chunk, left);
    buffer_.insert(buffer_.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(n));
  }
}

}  // namespace sigma::insec
