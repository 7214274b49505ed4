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

#include "sigma/sim/modbus_sim.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include <spdlog/spdlog.h>

namespace sigma::sim {

namespace {

std::uint16_t to_register(double engineering, const modbus::DecimalScale& scale) {
  const double s = static_cast<double>(scale.mantissa()) * std::pow(10.0, scale.exponent());
  const double raw = std::round(engineering / s);
  return static_cast<std::uint16_t>(std::clamp(raw, 0.0, 65535.0));
}

modbus::DecimalScale scale_from_json(const nlohmann::json& j) {
  if (j.is_string()) return modbus::DecimalScale::parse(j.get<std::string>());
  if (j.is_number()) return modbus::DecimalScale::parse(j.dump());
  throw ConfigError("register scale must be a number or a decimal string");
}

}  // namespace

ModbusFixture ModbusFixture::from_json(const nlohmann::json& j) {
  ModbusFixture f;
  f.tick_ms = j.value("tickMs", std::int64_t{50});
  if (f.tick_ms <= 0) throw ConfigError("tickMs must be positive");
  if (!j.contains("registers") || !j.at("registers").is_array()) throw ConfigError("fixture needs a registers array");
  for (const auto& r : j.at("registers")) {
    Register reg;
    reg.address = r.at("address").get<std::uint16_t>();
    reg.scale = r.contains("scale") ? scale_from_json(r.at("scale")) : modbus::DecimalScale{};
    reg.generator = Generator::from_json(r.at("generator"));
    f.registers.push_back(std::move(reg));
  }
  return f;
}

ModbusFixture ModbusFixture::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open fixture '" + file.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("fixture '" + file.string() + "': " + e.what());
  }
}

ModbusFixture ModbusFixture::cooling(bool overheat) {
  nlohmann::json temp = overheat
                            ? nlohmann::json{{"kind", "overheat"}, {"min", 20}, {"max", 30}, {"periodMs", 600000},
                                             {"startMs", 0},       {"ratePerSec", 5}, {"limit", 95}}
                            : nlohmann::json{{"kind", "sine"}, {"min", 20}, {"max", 30}, {"periodMs", 600000}};
  return from_json({{"tickMs", 50},
                    {"registers",
                     {{{"address", 0}, {"scale", "0.1"}, {"generator", temp}},
                      {{"address", 1},
                       {"scale", "1"},
                       {"generator", {{"kind", "sine"}, {"min", 1100}, {"max", 1300}, {"periodMs", 120000}}}}}}});
}

ModbusFixture ModbusFixture::cooling_constant(double celsius, double rpm) {
  return from_json({{"tickMs", 50},
                    {"registers",
                     {{{"address", 0}, {"scale", "0.1"}, {"generator", {{"kind", "constant"}, {"value", celsius}}}},
                      {{"address", 1}, {"scale", "1"}, {"generator", {{"kind", "constant"}, {"value", rpm}}}}}}});
}

ModbusCoolingSim::ModbusCoolingSim(ModbusFixture fixture, std::uint64_t seed)
    : fixture_(std::move(fixture)), seed_(seed), epoch_(std::chrono::steady_clock::now()) {
  for (std::size_t i = 0; i < fixture_.registers.size(); ++i) {
    if (!index_.emplace(fixture_.registers[i].address, i).second) {
      throw ConfigError("duplicate register address " + std::to_string(fixture_.registers[i].address));
    }
  }
}

void ModbusCoolingSim::start(std::uint16_t port, const std::string& host) {
  server_ = std::make_unique<net::TcpServer>(host, port);
  port_ = server_->port();
  server_->start([this](net::Socket s, const net::EventFd& stop) { serve(std::move(s), stop); });
}

void ModbusCoolingSim::stop() {
  if (server_) server_->stop();
  server_.reset();
}

std::int64_t ModbusCoolingSim::current_tick() const {
  const auto elapsed = std::chrono::steady_clock::now() - epoch_;
  return std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() / fixture_.tick_ms;
}

std::vector<std::uint16_t> ModbusCoolingSim::registers_at(std::int64_t tick) const {
  std::vector<std::uint16_t> out;
  out.reserve(fixture_.registers.size());
  for (const auto& r : fixture_.registers) {
    out.push_back(to_register(r.generator.at_tick(seed_, r.address, tick, fixture_.tick_ms), r.scale));
  }
  return out;
}

std::optional<std::uint16_t> ModbusCoolingSim::current(std::uint16_t address) const {
  {
    std::lock_guard lock(overrides_mutex_);
    if (auto it = overrides_.find(address); it != overrides_.end()) return it->second;
  }
  auto it = index_.find(address);
  if (it == index_.end()) return std::nullopt;
  const auto& r = fixture_.registers[it->second];
  return to_register(r.generator.at_tick(seed_, r.address, current_tick(), fixture_.tick_ms), r.scale);
}

void ModbusCoolingSim::set_override(std::uint16_t address, std::uint16_t raw) {
  std::lock_guard lock(overrides_mutex_);
  overrides_[address] = raw;
}

void ModbusCoolingSim::clear_overrides() {
  std::lock_guard lock(overrides_mutex_);
  overrides_.clear();
}

std::vector<std::uint8_t> ModbusCoolingSim::respond(std::span<const std::uint8_t> adu) const {
  const auto decoded = modbus::decode_request(adu);
  if (const auto* other = std::get_if<modbus::OtherFunctionRequest>(&decoded)) {
    return modbus::encode_exception({other->transaction_id, other->unit_id, other->function_code,
                                     static_cast<std::uint8_t>(modbus::ExceptionCode::IllegalFunction)});
  }
  const auto* req = std::get_if<modbus::ReadRequestFrame>(&decoded);
  if (!req) return {};
  const auto exception = [&](modbus::ExceptionCode code) {
    return modbus::encode_exception({req->transaction_id, req->unit_id, modbus::kReadHoldingRegisters,
                                     static_cast<std::uint8_t>(code)});
  };
  const auto& r = req->request;
  if (r.quantity < 1 || r.quantity > modbus::kMaxReadQuantity) return exception(modbus::ExceptionCode::IllegalDataValue);
  modbus::ReadHoldingRegsResponse resp{req->transaction_id, req->unit_id, {}};
  for (std::uint32_t a = r.start_address; a < std::uint32_t{r.start_address} + r.quantity; ++a) {
    const auto v = a <= 0xFFFF ? current(static_cast<std::uint16_t>(a)) : std::nullopt;
    if (!v) return exception(modbus::ExceptionCode::IllegalDataAddress);
    resp.registers.push_back(*v);
  }
  ++served_;
  return modbus::encode_read_response(resp);
}

void ModbusCoolingSim::serve(net::Socket socket, const net::EventFd& stop) {
  std::vector<std::uint8_t> buffer;
  std::array<std::uint8_t, 1024> chunk{};
  net::PlainStream stream(std::move(socket));
  while (!stop.signalled()) {
    if (!net::wait_readable(stream.fd(), net::Millis{-1}, stop.fd())) continue;
    if (stop.signalled()) break;
    const std::size_t n = stream.read_some(chunk, net::Millis{0});
    if (n == 0) continue;
    buffer.insert(buffer.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(n));
    for (;;) {
      const auto size = modbus::frame_size(buffer);
      if (std::holds_alternative<modbus::ProtocolViolation>(size)) {
        spdlog::debug("modbus sim: dropping connection after malformed request");
        return;
      }
      const std::size_t frame = std::get<std::size_t>(size);
      if (frame == 0 || buffer.size() < frame) break;
      const auto reply = respond(std::span<const std::uint8_t>(buffer.data(), frame));
      buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(frame));
      if (reply.empty()) return;
      stream.write_all(reply);
    }
  }
}

}  // namespace sigma::sim
