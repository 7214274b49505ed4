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

#include <signal.h>

#include <chrono>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "sigma/app/bridge.hpp"
#include "sigma/app/config.hpp"
#include "sigma/bench/harness.hpp"
#include "sigma/bench/report.hpp"
#include "sigma/bench/resources.hpp"
#include "sigma/bench/timing_model.hpp"
#include "sigma/core/errors.hpp"
#include "sigma/proxy/tamper_proxy.hpp"
#include "sigma/sim/legacy_sim.hpp"
#include "sigma/sim/modbus_sim.hpp"

namespace {

using namespace sigma;
using namespace std::chrono_literals;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitStartup = 3;

sigset_t shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

// Blocks until SIGINT/SIGTERM or until `poll` returns false.
template <typename Poll>
void wait_for_shutdown(Poll poll) {
  const auto set = shutdown_signals();
  const timespec step{0, 200'000'000};
  while (poll()) {
    if (sigtimedwait(&set, nullptr, &step) > 0) return;
  }
}

void wait_for_shutdown() {
  wait_for_shutdown([] { return true; });
}

void print_summary(const std::string& label, const bench::Summary& s, const std::string& unit) {
  std::cout << label << ": n=" << s.count << " mean=" << s.mean << unit << " sd=" << s.stddev << unit
            << " min=" << s.min << unit << " p50=" << s.p50 << unit << " p99=" << s.p99 << unit
            << " max=" << s.max << unit << "\n";
}

std::vector<double> column(const bench::SampleTable& t) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), t.metric);
  const auto col = static_cast<std::size_t>(it - t.columns.begin());
  std::vector<double> out;
  for (const auto& row : t.rows) out.push_back(std::stod(row[col]));
  return out;
}

struct Globals {
  std::string client_config = app::kClientConfigName;
  std::string server_config = app::kServerConfigName;
  std::string log_level = "info";
};

int cmd_run(const Globals& g) {
  app::Configs configs = app::load_configs(g.client_config, g.server_config);
  app::Bridge bridge(std::move(configs));
  bridge.start();
  std::string failed;
  wait_for_shutdown([&] {
    failed = bridge.failure();
    return failed.empty();
  });
  bridge.stop();
  if (!failed.empty()) {
    spdlog::error("secure server failed: {}", failed);
    return kExitStartup;
  }
  return kExitOk;
}

struct SimOptions {
  std::uint16_t port = 0;
  std::string host = "127.0.0.1";
  std::string fixture;
  std::uint64_t seed = 1;
  bool overheat = false;
  bool test_server = false;
};

int cmd_sim_modbus(const SimOptions& o) {
  auto fixture = o.fixture.empty() ? sim::ModbusFixture::cooling(o.overheat) : sim::ModbusFixture::load(o.fixture);
  sim::ModbusCoolingSim sim(std::move(fixture), o.seed);
  sim.start(o.port, o.host);
  std::cout << "modbus sim listening on " << o.host << ":" << sim.port() << std::endl;
  wait_for_shutdown();
  sim.stop();
  return kExitOk;
}

int cmd_sim_legacy(const SimOptions& o) {
  auto fixture = !o.fixture.empty() ? sim::LegacyFixture::load(o.fixture)
                 : o.test_server    ? sim::LegacyFixture::test_server()
                                    : sim::LegacyFixture::plc();
  sim::LegacyNodeSim sim(std::move(fixture), o.seed);
  sim.start(o.port, o.host);
  std::cout << "legacy sim listening on " << o.host << ":" << sim.port() << std::endl;
  wait_for_shutdown();
  sim.stop();
  return kExitOk;
}

struct ProxyOptions {
  std::string listen = "127.0.0.1:1503";
  std::string upstream = "127.0.0.1:1502";
  std::vector<std::string> rules;
};

int cmd_proxy(const ProxyOptions& o) {
  std::vector<proxy::TamperRule> rules;
  for (const auto& r : o.rules) rules.push_back(proxy::TamperRule::parse(r));
  const auto listen = net::Endpoint::parse(o.listen);
  proxy::TamperProxy proxy(net::Endpoint::parse(o.upstream), std::move(rules));
  proxy.start(listen.port, listen.host);
  std::cout << "tamper proxy " << listen.host << ":" << proxy.port() << " -> " << o.upstream << std::endl;
  wait_for_shutdown();
  proxy.stop();
  std::cout << "registers tampered: " << proxy.registers_tampered() << "\n";
  return kExitOk;
}

struct BenchOptions {
  std::size_t samples = 0;
  std::int64_t poll_ms = 10;
  std::int64_t timeout_ms = 5000;
  std::string out = "bench_out";
  std::uint64_t seed = 1;
  // bench-model
  double period_ms = 10;
  double transmission_ms = 1;
  // bench-resources
  int duration_s = 60;
  std::string bridge_exe;
  std::vector<std::string> scenarios;
};

std::filesystem::path work_dir(const BenchOptions& o, const std::string& name) {
  const auto dir = std::filesystem::absolute(o.out) / (name + "_work");
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int cmd_bench_e2e(const BenchOptions& o) {
  bench::LatencyTestBed bed({o.poll_ms, work_dir(o, "e2e"), o.seed, false});
  bed.start();
  const double one_way = bench::measure_one_way_seconds({"127.0.0.1", bed.test_server().port()});
  const auto samples = bench::run_e2e_latency(bed, o.samples, std::chrono::milliseconds(o.timeout_ms));
  bed.stop_bridge();
  const auto table = bench::latency_table(samples);
  const auto files = bench::emit_report(table, std::filesystem::path(o.out) / "e2e_latency");
  const auto matches = std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.match; });
  const auto timeouts = std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.timed_out; });
  print_summary("latency", bench::summarize(column(table)), "ms");
  std::cout << "match " << matches << "/" << samples.size() << ", timeouts " << timeouts << "\n"
            << "t_t (loopback RTT/2) " << one_way * 1e3 << "ms, bound 2(t_t+T) "
            << 2 * (one_way * 1e3 + static_cast<double>(o.poll_ms)) << "ms\n"
            << "wrote " << files.csv.string() << "\n";
  return matches == static_cast<std::ptrdiff_t>(samples.size()) ? kExitOk : kExitFailure;
}

int cmd_bench_internal(const BenchOptions& o) {
  bench::LatencyTestBed bed({o.poll_ms, work_dir(o, "internal"), o.seed, true});
  bed.start();
  const auto samples = bench::record_internal_latency(bed, o.samples);
  bed.stop_bridge();
  const auto table = bench::internal_table(samples);
  const auto files = bench::emit_report(table, std::filesystem::path(o.out) / "internal_latency");
  print_summary("tProc", bench::summarize(column(table)), "us");
  std::cout << "wrote " << files.csv.string() << "\n";
  return kExitOk;
}

int cmd_bench_model(const BenchOptions& o) {
  const auto to_ns = [](double ms) { return static_cast<bench::Nanos>(std::llround(ms * 1e6)); };
  const bench::Nanos period = to_ns(o.period_ms);
  const bench::Nanos transmission = to_ns(o.transmission_ms);
  const std::size_t steps = o.samples ? o.samples : 10000;

  bench::SampleTable t{{"phase_ms", "forwarding_delay_ms", "worst_data_age_ms"}, {}, "forwarding_delay_ms", "ms"};
  for (std::size_t i = 0; i < steps; ++i) {
    const bench::Nanos phase = period * static_cast<bench::Nanos>(i) / static_cast<bench::Nanos>(steps);
    const auto r = bench::forwarding_delay_sim({period, transmission, phase});
    t.rows.push_back({std::to_string(static_cast<double>(phase) / 1e6),
                      std::to_string(static_cast<double>(r.forwarding_delay) / 1e6),
                      std::to_string(static_cast<double>(r.worst_data_age) / 1e6)});
  }
  const auto files = bench::emit_report(t, std::filesystem::path(o.out) / "forwarding_delay");
  const auto bounds = bench::data_age_bounds(period, transmission);
  print_summary("t_d", bench::summarize(column(t)), "ms");
  std::cout << "t_d interval [" << o.transmission_ms << ", " << o.transmission_ms + o.period_ms << ")ms\n"
            << "data age best " << static_cast<double>(bounds.best) / 1e6 << "ms, worst "
            << static_cast<double>(bounds.worst) / 1e6 << "ms, direct polling "
            << static_cast<double>(bounds.direct) / 1e6 << "ms\n"
            << "wrote " << files.csv.string() << "\n";
  return kExitOk;
}

int cmd_bench_resources(const BenchOptions& o) {
  const std::filesystem::path exe =
      o.bridge_exe.empty() ? std::filesystem::read_symlink("/proc/self/exe") : std::filesystem::path(o.bridge_exe);
  for (const auto& scenario : bench::standard_scenarios()) {
    if (!o.scenarios.empty() && std::find(o.scenarios.begin(), o.scenarios.end(), scenario.name) == o.scenarios.end()) {
      continue;
    }
    const auto result =
        bench::run_resource_scenario(exe, scenario, std::chrono::seconds(o.duration_s), work_dir(o, scenario.name));
    bench::emit_report(bench::resource_table(result.series), std::filesystem::path(o.out) / ("resources_" + scenario.name));
    std::cout << scenario.name << ": cpu " << result.cpu.mean << "% (sd " << result.cpu.stddev << "), rss "
              << result.rss_mib.mean << " MiB (sd " << result.rss_mib.stddev << "), private "
              << result.anon_mib.mean << " MiB"
              << (result.series.truncated ? " [truncated]" : "") << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Shutdown signals are consumed with sigtimedwait; block them before any thread starts.
  const auto set = shutdown_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  signal(SIGPIPE, SIG_IGN);

  CLI::App app{"sigma-bridge: secure aggregation bridge for legacy SNAP and Modbus/TCP devices"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--client-config", g.client_config, "client configuration file");
  app.add_option("--server-config", g.server_config, "server configuration file");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  auto* run = app.add_subcommand("run", "run the bridge until SIGINT/SIGTERM");

  SimOptions modbus_sim;
  modbus_sim.port = sim::kDefaultModbusPort;
  auto* sim_modbus = app.add_subcommand("sim-modbus", "Modbus/TCP cooling-system simulator");
  sim_modbus->add_option("--port", modbus_sim.port, "listen port (0 picks one)");
  sim_modbus->add_option("--host", modbus_sim.host);
  sim_modbus->add_option("--fixture", modbus_sim.fixture, "register fixture JSON");
  sim_modbus->add_option("--seed", modbus_sim.seed);
  sim_modbus->add_flag("--overheat", modbus_sim.overheat, "temperature ramps towards its limit");

  SimOptions legacy_sim;
  legacy_sim.port = sim::kDefaultLegacyPort;
  auto* sim_legacy = app.add_subcommand("sim-legacy", "legacy SNAP device simulator");
  sim_legacy->add_option("--port", legacy_sim.port, "listen port (0 picks one)");
  sim_legacy->add_option("--host", legacy_sim.host);
  sim_legacy->add_option("--fixture", legacy_sim.fixture, "node fixture JSON");
  sim_legacy->add_option("--seed", legacy_sim.seed);
  sim_legacy->add_flag("--test-server", legacy_sim.test_server, "fresh random value on every read");

  ProxyOptions proxy_options;
  auto* proxy = app.add_subcommand("proxy-tamper", "Modbus/TCP relay that rewrites register values");
  proxy->add_option("--listen", proxy_options.listen, "host:port");
  proxy->add_option("--upstream", proxy_options.upstream, "host:port");
  proxy->add_option("--rule", proxy_options.rules, "ADDR=VALUE, repeatable");

  BenchOptions e2e;
  e2e.samples = 1000;
  auto* bench_e2e = app.add_subcommand("bench-e2e", "end-to-end latency with value matching");
  bench_e2e->add_option("--samples", e2e.samples);
  bench_e2e->add_option("--poll-ms", e2e.poll_ms, "insecure poll interval");
  bench_e2e->add_option("--timeout-ms", e2e.timeout_ms, "per-sample match timeout");
  bench_e2e->add_option("--out", e2e.out, "report directory");
  bench_e2e->add_option("--seed", e2e.seed);

  BenchOptions internal;
  internal.samples = 1500;
  auto* bench_internal = app.add_subcommand("bench-internal", "store-boundary processing latency");
  bench_internal->add_option("--samples", internal.samples);
  bench_internal->add_option("--poll-ms", internal.poll_ms);
  bench_internal->add_option("--out", internal.out);

  BenchOptions model;
  model.samples = 10000;
  auto* bench_model = app.add_subcommand("bench-model", "forwarding delay sweep and data-age bounds");
  bench_model->add_option("--period-ms", model.period_ms);
  bench_model->add_option("--transmission-ms", model.transmission_ms);
  bench_model->add_option("--steps", model.samples, "phase steps over one period");
  bench_model->add_option("--out", model.out);

  BenchOptions resources;
  auto* bench_resources = app.add_subcommand("bench-resources", "CPU and memory of the bridge per scenario");
  bench_resources->add_option("--duration", resources.duration_s, "seconds per scenario");
  bench_resources->add_option("--bridge-exe", resources.bridge_exe, "bridge binary (defaults to this one)");
  bench_resources->add_option("--scenario", resources.scenarios, "1-server, 2-servers, 3-servers, 3-servers-modbus");
  bench_resources->add_option("--out", resources.out);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (run->parsed()) return cmd_run(g);
    if (sim_modbus->parsed()) return cmd_sim_modbus(modbus_sim);
    if (sim_legacy->parsed()) return cmd_sim_legacy(legacy_sim);
    if (proxy->parsed()) return cmd_proxy(proxy_options);
    if (bench_e2e->parsed()) return cmd_bench_e2e(e2e);
    if (bench_internal->parsed()) return cmd_bench_internal(internal);
    if (bench_model->parsed()) return cmd_bench_model(model);
    if (bench_resources->parsed()) return cmd_bench_resources(resources);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const StartupError& e) {
    spdlog::error("{}", e.what());
    return kExitStartup;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
