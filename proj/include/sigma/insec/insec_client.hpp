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

/**
 * @file insec_client.hpp
 * @brief Polling worker for one legacy device.
 *
 * A worker connects to its device, discovers (SNAP) or synthesizes (Modbus)
 * the node structure, hands it to the store, and then polls every value on
 * a fixed period. Any connection-level failure sends it back through
 * Reconnecting with a delay of one poll interval.
 */

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <thread>
#include <vector>

#include "sigma/core/model.hpp"
#include "sigma/modbus/codec.hpp"
#include "sigma/net/socket.hpp"
#include "sigma/snap/channel.hpp"
#include "sigma/store/data_store.hpp"
#include "sigma/store/latency_probe.hpp"

namespace sigma::insec {

class ModbusClient;

enum class Protocol { SnapLegacy, ModbusTcp };

struct InsecEndpointConfig {
  core::DeviceAlias alias{"device"};
  Protocol protocol = Protocol::SnapLegacy;
  net::Endpoint endpoint;
  std::int64_t poll_interval_ms = 100;
  /// SnapLegacy: explicit node list, or every variable reachable from Objects.
  bool select_all = false;
  std::vector<core::NodeId> nodes;
  /// ModbusTcp.
  std::uint8_t unit_id = 1;
  std::vector<modbus::RegisterBinding> registers;
};

/// Throws ConfigError.
void validate(const InsecEndpointConfig& config);

enum class Phase { Connecting, Discovering, Polling, Reconnecting, Stopped };

std::string_view phase_name(Phase phase) noexcept;

class ClientState {
 public:
  Phase phase() const noexcept { return phase_; }
  std::uint64_t consecutive_failures() const noexcept { return failures_; }

  static bool allowed(Phase from, Phase to) noexcept;
  /// Throws std::logic_error for a transition outside the allowed set.
  void transition(Phase to);
  void record_failure() noexcept { ++failures_; }
  void reset_failures() noexcept { failures_ = 0; }

 private:
  Phase phase_ = Phase::Connecting;
  std::uint64_t failures_ = 0;
};

struct DeviceStructure {
  core::NamespaceTable table;
  std::vector<core::NodeDescriptor> nodes;
};

/// Reads the namespace array and the attributes and browse path of every
/// selected node. Throws StructuralError for orphans, non-variables, unknown
/// data types and unknown nodes; transport failures propagate.
DeviceStructure discover_structure(snap::SnapClient& client, const InsecEndpointConfig& config);

/// One synthetic namespace at index 1, one variable per register binding.
/// Throws ConfigError on duplicate node ids.
DeviceStructure synthesize_modbus_structure(const InsecEndpointConfig& config);

/// Contiguous address runs of at most 125 registers, in address order.
struct RegisterRun {
  std::uint16_t start = 0;
  std::uint16_t quantity = 0;
  std::vector<std::size_t> bindings;  ///< indices into the config's registers
};
std::vector<RegisterRun> plan_register_runs(const std::vector<modbus::RegisterBinding>& bindings);

/// Strictly increasing system-clock timestamps for one worker.
class WorkerClock {
 public:
  std::int64_t next();

 private:
  std::int64_t last_ = 0;
};

struct CycleResult {
  std::size_t written = 0;
  std::size_t failed = 0;
};

/// Reads every node once and writes the values. Per-node failures are
/// counted; transport or protocol failures throw and leave later nodes unwritten.
CycleResult poll_snap_cycle(snap::SnapClient& client, const InsecEndpointConfig& config,
                            const std::vector<core::NodeDescriptor>& nodes, store::StoreWriter& writer,
                            WorkerClock& clock, store::LatencyProbe* probe = nullptr);
CycleResult poll_modbus_cycle(ModbusClient& client, const InsecEndpointConfig& config,
                              const std::vector<RegisterRun>& runs, store::StoreWriter& writer, WorkerClock& clock,
                              store::LatencyProbe* probe = nullptr);

class InsecClient {
 public:
  struct Options {
    net::Millis io_timeout{1000};
    store::LatencyProbe* probe = nullptr;
  };

  InsecClient(InsecEndpointConfig config, store::StoreWriter writer, Options options);
  InsecClient(InsecEndpointConfig config, store::StoreWriter writer)
      : InsecClient(std::move(config), std::move(writer), Options{}) {}
  ~InsecClient() { stop(); }

  void start();
  /// Interrupts any wait or blocking read and joins the worker.
  void stop();

  Phase phase() const;
  std::uint64_t cycles() const noexcept { return cycles_.load(); }
  std::uint64_t read_failures() const noexcept { return read_failures_.load(); }
  std::uint64_t connection_failures() const noexcept { return connection_failures_.load(); }
  const InsecEndpointConfig& config() const noexcept { return config_; }

 private:
  void run(std::stop_token stop);
  void session(std::stop_token stop);
  void set_phase(Phase to);
  /// false when stopped during the wait.
  bool sleep_until(std::chrono::steady_clock::time_point deadline, std::stop_token stop);
  void set_active(net::Stream* stream);

  InsecEndpointConfig config_;
  store::StoreWriter writer_;
  Options options_;
  WorkerClock clock_;

  mutable std::mutex state_mutex_;
  ClientState state_;
  std::condition_variable_any wake_;
  net::Stream* active_ = nullptr;

  std::atomic<std::uint64_t> cycles_{0};
  std::atomic<std::uint64_t> read_failures_{0};
  std::atomic<std::uint64_t> connection_failures_{0};
  std::jthread thread_;
};

}  // namespace sigma::insec
