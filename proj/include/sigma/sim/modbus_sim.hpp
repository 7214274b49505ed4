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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "sigma/modbus/codec.hpp"
#include "sigma/net/server.hpp"
#include "sigma/sim/generator.hpp"

namespace sigma::sim {

inline constexpr std::uint16_t kDefaultModbusPort = 1502;

/// Holding registers of a simulated Modbus/TCP device.
///
/// JSON form:
///   {"tickMs":50,"registers":[{"address":0,"scale":"0.1","generator":{...}}, ...]}
/// The generator yields engineering units; the register holds
/// round(value / scale) clamped to [0, 65535].
struct ModbusFixture {
  struct Register {
    std::uint16_t address = 0;
    modbus::DecimalScale scale;
    Generator generator;
  };
  std::int64_t tick_ms = 50;
  std::vector<Register> registers;

  static ModbusFixture from_json(const nlohmann::json& j);
  static ModbusFixture load(const std::filesystem::path& file);

  /// Register 0: temperature in tenths of °C (sine 20–30 °C); register 1: fan RPM.
  static ModbusFixture cooling(bool overheat = false);
  /// Fixed 23.5 °C / 1200 RPM.
  static ModbusFixture cooling_constant(double celsius = 23.5, double rpm = 1200);
};

class ModbusCoolingSim {
 public:
  ModbusCoolingSim(ModbusFixture fixture, std::uint64_t seed);
  ~ModbusCoolingSim() { stop(); }

  /// Binds and starts serving; port 0 picks a free port. Throws StartupError.
  void start(std::uint16_t port, const std::string& host = "127.0.0.1");
  /// Closes the listener and drops every connection.
  void stop();
  std::uint16_t port() const noexcept { return port_; }

  /// Register image at a given tick; pure function of fixture and seed.
  std::vector<std::uint16_t> registers_at(std::int64_t tick) const;
  /// Raw register value currently served (honours overrides).
  std::optional<std::uint16_t> current(std::uint16_t address) const;
  /// Pins a register to a raw value until cleared.
  void set_override(std::uint16_t address, std::uint16_t raw);
  void clear_overrides();

  /// Response bytes for one request ADU (used by the server and by tests).
  std::vector<std::uint8_t> respond(std::span<const std::uint8_t> request_adu) const;
  std::uint64_t requests_served() const noexcept { return served_.load(); }

 private:
  std::int64_t current_tick() const;
  void serve(net::Socket socket, const net::EventFd& stop);

  ModbusFixture fixture_;
  std::uint64_t seed_;
  std::map<std::uint16_t, std::size_t> index_;
  std::chrono::steady_clock::time_point epoch_;
  mutable std::mutex overrides_mutex_;
  std::map<std::uint16_t, std::uint16_t> overrides_;
  std::unique_ptr<net::TcpServer> server_;
  std::uint16_t port_ = 0;
  mutable std::atomic<std::uint64_t> served_{0};
};

}  // namespace sigma::sim
