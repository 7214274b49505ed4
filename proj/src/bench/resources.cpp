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

#include "sigma/bench/resources.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "sigma/app/config.hpp"
#include "sigma/bench/harness.hpp"
#include "sigma/core/errors.hpp"
#include "sigma/net/socket.hpp"
#include "sigma/sim/legacy_sim.hpp"
#include "sigma/sim/modbus_sim.hpp"

extern char** environ;

namespace sigma::bench {

namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr const char* kUser = "operator";
constexpr const char* kPass = "resource-bench";
constexpr double kMiB = 1024.0 * 1024.0;

// utime + stime in clock ticks, nullopt once the process is gone.
std::optional<std::uint64_t> cpu_ticks(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/stat");
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  // comm may contain spaces; fields resume after the last ')'.
  const auto close = line.rfind(')');
  if (close == std::string::npos) return std::nullopt;
  std::istringstream rest(line.substr(close + 2));
  std::string state;
  rest >> state;
  if (state == "Z" || state == "X") return std::nullopt;
  std::string skip;
  for (int i = 0; i < 10; ++i) rest >> skip;  // ppid .. cmajflt
  std::uint64_t utime = 0;
  std::uint64_t stime = 0;
  if (!(rest >> utime >> stime)) return std::nullopt;
  return utime + stime;
}

struct Resident {
  std::uint64_t total = 0;
  std::uint64_t anon = 0;
};

std::optional<Resident> resident(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/status");
  std::string line;
  Resident r;
  bool total = false;
  bool anon = false;
  const auto kib = [&](std::size_t skip) {
    std::istringstream fields(line.substr(skip));
    std::uint64_t v = 0;
    fields >> v;
    return v * 1024;
  };
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      r.total = kib(6);
      total = true;
    } else if (line.rfind("RssAnon:", 0) == 0) {
      r.anon = kib(8);
      anon = true;
    }
  }
  if (!total || !anon) return std::nullopt;
  return r;
}

std::uint16_t free_port() {
  net::TcpListener probe("127.0.0.1", 0);
  return probe.port();
}

}  // namespace

ResourceSeries sample_resources(pid_t pid, std::chrono::seconds duration, std::chrono::milliseconds interval) {
  ResourceSeries series;
  const double tick_hz = static_cast<double>(::sysconf(_SC_CLK_TCK));
  auto last_ticks = cpu_ticks(pid);
  if (!last_ticks) {
    series.truncated = true;
    return series;
  }
  const auto start = SteadyClock::now();
  auto last = start;
  for (auto next = start + interval; next <= start + duration; next += interval) {
    std::this_thread::sleep_until(next);
    const auto ticks = cpu_ticks(pid);
    const auto rss = resident(pid);
    if (!ticks || !rss) {
      series.truncated = true;
      break;
    }
    const auto now = SteadyClock::now();
    const double wall = std::chrono::duration<double>(now - last).count();
    ResourceSample s;
    s.t_s = std::chrono::duration<double>(now - start).count();
    s.cpu_percent = wall > 0 ? 100.0 * static_cast<double>(*ticks - *last_ticks) / tick_hz / wall : 0.0;
    s.rss_bytes = rss->total;
    s.anon_bytes = rss->anon;
    series.samples.push_back(s);
    last_ticks = ticks;
    last = now;
  }
  return series;
}

Subprocess::Subprocess(const std::vector<std::string>& argv, const std::filesystem::path& log_file) {
  if (argv.empty()) throw StartupError("empty command line");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  const std::string log = log_file.string();
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  const int rc = ::posix_spawn(&pid_, argv[0].c_str(), &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw StartupError("cannot spawn " + argv[0] + ": " + std::strerror(rc));
}

Subprocess::~Subprocess() {
  if (!reaped_) terminate(SIGKILL, std::chrono::seconds(5));
}

bool Subprocess::running() {
  if (reaped_) return false;
  const pid_t r = ::waitpid(pid_, &status_, WNOHANG);
  if (r == pid_) reaped_ = true;
  return !reaped_;
}

int Subprocess::terminate(int signal, std::chrono::milliseconds grace) {
  if (running()) {
    ::kill(pid_, signal);
    const auto deadline = SteadyClock::now() + grace;
    while (running() && SteadyClock::now() < deadline) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    if (!reaped_) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status_, 0);
      reaped_ = true;
    }
  }
  if (WIFEXITED(status_)) return WEXITSTATUS(status_);
  if (WIFSIGNALED(status_)) return 128 + WTERMSIG(status_);
  return -1;
}

std::vector<ResourceScenario> standard_scenarios() {
  return {{"1-server", 1, false}, {"2-servers", 2, false}, {"3-servers", 3, false}, {"3-servers-modbus", 3, true}};
}

ScenarioResult run_resource_scenario(const std::filesystem::path& bridge_exe, const ResourceScenario& scenario,
                                     std::chrono::seconds duration, const std::filesystem::path& work_dir) {
  std::filesystem::create_directories(work_dir);
  const auto tls = TlsMaterial::create(work_dir / "tls");

  std::vector<std::unique_ptr<sim::LegacyNodeSim>> plcs;
  app::Configs configs;
  for (int i = 0; i < scenario.snap_servers; ++i) {
    auto sim = std::make_unique<sim::LegacyNodeSim>(sim::LegacyFixture::plc(), 100 + i);
    sim->start(0);
    insec::InsecEndpointConfig device;
    device.alias = core::DeviceAlias("PLC" + std::to_string(i + 1));
    device.endpoint = {"127.0.0.1", sim->port()};
    device.select_all = true;
    configs.client.devices.push_back(device);

    sec::SecServerConfig server;
    server.alias = device.alias;
    server.host = "127.0.0.1";
    server.port = free_port();
    server.cert_file = tls.cert;
    server.key_file = tls.key;
    server.user = kUser;
    server.pass = kPass;
    configs.server.servers.push_back(server);
    plcs.push_back(std::move(sim));
  }
  std::unique_ptr<sim::ModbusCoolingSim> cooler;
  if (scenario.modbus_client) {
    cooler = std::make_unique<sim::ModbusCoolingSim>(sim::ModbusFixture::cooling(), 7);
    cooler->start(0);
    insec::InsecEndpointConfig device;
    device.alias = core::DeviceAlias("Cooler");
    device.protocol = insec::Protocol::ModbusTcp;
    device.endpoint = {"127.0.0.1", cooler->port()};
    device.registers = {
        {0, modbus::DecimalScale::parse("0.1"), core::DataKind::Double, core::NodeId(1, "temp"), "Temperature", false},
        {1, modbus::DecimalScale::parse("1"), core::DataKind::Int32, core::NodeId(1, "rpm"), "FanSpeed", false}};
    configs.client.devices.push_back(device);
  }
  configs.server.mirror_root = work_dir / "config";

  const auto client_file = work_dir / app::kClientConfigName;
  const auto server_file = work_dir / app::kServerConfigName;
  std::ofstream(client_file) << app::to_json(configs.client).dump(2) << "\n";
  std::ofstream(server_file) << app::to_json(configs.server).dump(2) << "\n";

  Subprocess bridge({bridge_exe.string(), "run", "--client-config", client_file.string(), "--server-config",
                     server_file.string(), "--log-level", "warn"},
                    work_dir / "bridge.log");

  // One reader per secure server, polling every variable at 100 ms.
  std::atomic<bool> stop{false};
  std::vector<std::jthread> readers;
  const auto ctx = net::TlsContext::client({tls.cert, "localhost", std::nullopt, std::nullopt});
  for (const auto& server : configs.server.servers) {
    readers.emplace_back([&, port = server.port] {
      std::optional<snap::SnapClient> client;
      std::vector<core::NodeId> nodes;
      const auto plc = sim::LegacyFixture::plc();
      for (const auto& v : plc.variables) nodes.push_back(v.node);
      while (!stop) {
        try {
          if (!client) {
            client.emplace(snap::SnapClient::connect_tls({"127.0.0.1", port}, ctx));
            client->hello(kUser, kPass);
          }
          for (const auto& n : nodes) {
            try {
              client->read(n);
            } catch (const snap::StatusError&) {
            }
          }
        } catch (const Error& e) {
          spdlog::debug("resource reader on {}: {}", port, e.what());
          client.reset();
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
    });
  }

  ScenarioResult result;
  result.scenario = scenario;
  result.series = sample_resources(bridge.pid(), duration);
  stop = true;
  readers.clear();
  const int code = bridge.terminate(SIGINT);
  if (code != 0) spdlog::warn("bridge for scenario {} exited with {}", scenario.name, code);

  if (result.series.samples.empty()) {
    throw StartupError("bridge for scenario " + scenario.name + " exited before the first sample (see " +
                       (work_dir / "bridge.log").string() + ")");
  }
  std::vector<double> cpu;
  std::vector<double> rss;
  std::vector<double> anon;
  for (const auto& s : result.series.samples) {
    cpu.push_back(s.cpu_percent);
    rss.push_back(static_cast<double>(s.rss_bytes) / kMiB);
    anon.push_back(static_cast<double>(s.anon_bytes) / kMiB);
  }
  result.cpu = summarize(cpu);
  result.rss_mib = summarize(rss);
  result.anon_mib = summarize(anon);
  return result;
}

SampleTable resource_table(const ResourceSeries& series) {
  SampleTable t{{"t_s", "cpu_percent", "rss_bytes", "anon_bytes", "rss_mib"}, {}, "rss_mib", "MiB"};
  for (const auto& s : series.samples) {
    std::ostringstream ts, cpu, mib;
    ts.precision(3);
    cpu.precision(3);
    mib.precision(3);
    ts << std::fixed << s.t_s;
    cpu << std::fixed << s.cpu_percent;
    mib << std::fixed << static_cast<double>(s.rss_bytes) / kMiB;
    t.rows.push_back({ts.str(), cpu.str(), std::to_string(s.rss_bytes), std::to_string(s.anon_bytes), mib.str()});
  }
  return t;
}

}  // namespace sigma::bench
