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

#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "sigma/modbus/codec.hpp"
#include "sigma/net/socket.hpp"

namespace sigma::insec {

/// Blocking Modbus/TCP master for function 0x03, one request in flight.
class ModbusClient {
 public:
  using ReadResult = std::variant<std::vector<std::uint16_t>, modbus::ExceptionResponse>;

  /// Throws IoError.
  static ModbusClient connect(const net::Endpoint& to, net::Millis timeout);

  /// Exception responses are returned; transport failures throw IoError and
  /// malformed or mismatched responses throw ProtocolError.
  ReadResult read(std::uint8_t unit, std::uint16_t start, std::uint16_t quantity);

  net::Stream& stream() noexcept { return *stream_; }

 private:
  ModbusClient(std::unique_ptr<net::Stream> stream, net::Millis timeout)
      : stream_(std::move(stream)), timeout_(timeout) {}

  std::unique_ptr<net::Stream> stream_;
  net::Millis timeout_;
  std::uint16_t next_txn_ = 1;
  std::vector<std::uint8_t> buffer_;
};

}  // namespace sigma::insec
