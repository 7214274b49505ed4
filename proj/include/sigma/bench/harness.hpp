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
 * @file harness.hpp
 * @brief In-process latency test bed.
 *
 * A test server (legacy SNAP sim that draws a new random value on every
 * read) feeds a bridge whose secure endpoint is read by a test client in
 * the same process, so both ends share one monotonic clock.
 */

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>

#include "sigma/app/bridge.hpp"
#include "sigma/bench/report.hpp"
#include "sigma/net/tls.hpp"
#include "sigma/sim/legacy_sim.hpp"
#include "sigma/snap/channel.hpp"

namespace sigma::bench {

struct LatencySample {
  double latency_s = 0;
  bool match = false;
  bool timed_out = false;
  std::optional<core::DataVariant> returned;  ///< generated by the test server
  std::optional<core::DataVariant> received;  ///< observed at the secure endpoint
};

/// Self-signed server certificate plus its key in `dir`.
struct TlsMaterial {
  std::filesystem::path cert;
  std::filesystem::path key;
  static TlsMaterial create(const std::filesystem::path& dir, const std::string& common_name = "sigma-bridge");
};

class LatencyTestBed {
 public:
  struct Options {
    std::int64_t poll_interval_ms = 10;
    std::filesystem::path work_dir;
    std::uint64_t seed = 1;
    bool instrumentation = false;
  };

  explicit LatencyTestBed(Options options);
  ~LatencyTestBed();

  /// Throws StartupError when the bridge does not serve within the timeout.
  void start(std::chrono::milliseconds timeout = std::chrono::seconds(10));
  void stop_bridge();

  sim::LegacyNodeSim& test_server() noexcept { return *sim_; }
  app::Bridge& bridge() noexcept { return *bridge_; }
  std::uint16_t secure_port() const;
  core::NodeId value_node() const { return core::NodeId(1, 1); }

  /// Authenticated secure client.
  snap::SnapClient connect_secure(net::Millis timeout = net::Millis{2000}) const;

  struct Generated {
    core::DataVariant value;
    std::chrono::steady_clock::time_point ts;
    std::uint64_t sequence = 0;
  };
  /// Next value generated after the call, or nullopt on timeout.
  std::optional<Generated> next_generated(std::chrono::milliseconds timeout);
  /// Values generated after `sequence` so far.
  std::vector<Generated> generated_after(std::uint64_t sequence);

 private:
  Options options_;
  TlsMaterial tls_;
  std::unique_ptr<sim::LegacyNodeSim> sim_;
  std::unique_ptr<app::Bridge> bridge_;
  net::TlsContext client_ctx_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Generated> generated_;
  std::uint64_t sequence_ = 0;
};

/// Runs the match/latency loop `count` times. Each sample waits for the
/// next value the test server generates, then spin-reads the secure
/// endpoint until that value appears, a newer generated value appears
/// instead (mismatch) or `timeout` elapses.
std::vector<LatencySample> run_e2e_latency(LatencyTestBed& bed, std::size_t count,
                                           std::chrono::milliseconds timeout = std::chrono::seconds(5));

/// Half the median round trip of a SNAP read against `endpoint`, in seconds.
double measure_one_way_seconds(const net::Endpoint& endpoint, std::size_t rounds = 200);

/// Spin-reads the secure endpoint until the probe holds `count` samples.
/// Throws ConfigError when the bed runs without instrumentation, IoError on timeout.
std::vector<store::InternalLatencySample> record_internal_latency(
    LatencyTestBed& bed, std::size_t count, std::chrono::milliseconds timeout = std::chrono::seconds(120));

SampleTable latency_table(const std::vector<LatencySample>& samples);
SampleTable internal_table(const std::vector<store::InternalLatencySample>& samples);

}  // namespace sigma::bench
