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

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "sigma/bench/report.hpp"

namespace sigma::bench {

struct ResourceSample {
  double t_s = 0;
  double cpu_percent = 0;
  std::uint64_t rss_bytes = 0;   ///< VmRSS, including shared library pages
  std::uint64_t anon_bytes = 0;  ///< RssAnon, private heap and stacks
};

struct ResourceSeries {
  std::vector<ResourceSample> samples;
  /// The process exited before the duration elapsed.
  bool truncated = false;
};

/// Samples CPU (utime + stime delta over wall time) and VmRSS of `pid`.
ResourceSeries sample_resources(pid_t pid, std::chrono::seconds duration,
                                std::chrono::milliseconds interval = std::chrono::seconds(1));

/// Child process with stdout/stderr appended to a log file.
class Subprocess {
 public:
  /// Throws StartupError when spawning fails.
  Subprocess(const std::vector<std::string>& argv, const std::filesystem::path& log_file);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  pid_t pid() const noexcept { return pid_; }
  bool running();
  /// Sends `signal` and waits up to `grace`, then SIGKILL. Returns the exit code (128+sig when signalled).
  int terminate(int signal, std::chrono::milliseconds grace = std::chrono::seconds(10));

 private:
  pid_t pid_ = -1;
  int status_ = 0;
  bool reaped_ = false;
};

struct ResourceScenario {
  std::string name;
  int snap_servers = 1;
  bool modbus_client = false;
};

/// 1, 2 and 3 secure servers, then 3 servers plus a Modbus client.
std::vector<ResourceScenario> standard_scenarios();

struct ScenarioResult {
  ResourceScenario scenario;
  ResourceSeries series;
  Summary cpu;
  Summary rss_mib;
  Summary anon_mib;
};

/// Starts the sims in this process, runs `bridge_exe run` against them with
/// one reading client per secure server, and samples the bridge process.
ScenarioResult run_resource_scenario(const std::filesystem::path& bridge_exe, const ResourceScenario& scenario,
                                     std::chrono::seconds duration, const std::filesystem::path& work_dir);

SampleTable resource_table(const ResourceSeries& series);

}  // namespace sigma::bench
