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

#include "sigma/bench/harness.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

namespace sigma::bench {

namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr const char* kUser = "bench";
constexpr const char* kPass = "bench-pass";

std::string cell(const std::optional<core::DataVariant>& v) {
  if (!v) return "";
  std::ostringstream out;
  out.precision(17);
  if (const auto* d = std::get_if<double>(&*v)) {
    out << *d;
    return out.str();
  }
  return core::to_string(*v);
}

}  // namespace

TlsMaterial TlsMaterial::create(const std::filesystem::path& dir, const std::string& common_name) {
  std::filesystem::create_directories(dir);
  TlsMaterial m{dir / "server.pem", dir / "server.key"};
  net::generate_self_signed(common_name, m.cert, m.key);
  return m;
}

LatencyTestBed::LatencyTestBed(Options options)
    : options_(std::move(options)),
      tls_(TlsMaterial::create(options_.work_dir / "tls")),
      client_ctx_(net::TlsContext::client({tls_.cert, "localhost", std::nullopt, std::nullopt})) {
  sim_ = std::make_unique<sim::LegacyNodeSim>(sim::LegacyFixture::test_server(), options_.seed);
  sim_->set_read_observer([this](const core::NodeId&, const core::DataValue& v, SteadyClock::time_point sent) {
    {
      std::lock_guard lock(mutex_);
      generated_.push_back({v.variant, sent, ++sequence_});
      if (generated_.size() > 4096) generated_.pop_front();
    }
    cv_.notify_all();
  });
  sim_->start(0);

  app::Configs configs;
  insec::InsecEndpointConfig client;
  client.alias = core::DeviceAlias("TestServer");
  client.endpoint = {"127.0.0.1", sim_->port()};
  client.poll_interval_ms = options_.poll_interval_ms;
  client.nodes = {value_node()};
  configs.client.devices.push_back(client);

  sec::SecServerConfig server;
  server.alias = client.alias;
  server.host = "127.0.0.1";
  server.port = 0;
  server.cert_file = tls_.cert;
  server.key_file = tls_.key;
  server.auth = sec::AuthMode::UserPass;
  server.user = kUser;
  server.pass = kPass;
  server.startup_timeout_ms = 10000;
  configs.server.servers.push_back(server);
  configs.server.mirror_root = options_.work_dir / "config";
  configs.server.instrumentation = options_.instrumentation;
  bridge_ = std::make_unique<app::Bridge>(std::move(configs));
}

LatencyTestBed::~LatencyTestBed() {
  stop_bridge();
  sim_->stop();
}

void LatencyTestBed::start(std::chrono::milliseconds timeout) {
  bridge_->start();
  if (!bridge_->wait_serving(timeout)) throw StartupError("test bridge did not start: " + bridge_->failure());
}

void LatencyTestBed::stop_bridge() {
  if (bridge_) bridge_->stop();
}

std::uint16_t LatencyTestBed::secure_port() const { return bridge_->servers().front()->port(); }

snap::SnapClient LatencyTestBed::connect_secure(net::Millis timeout) const {
  auto client = snap::SnapClient::connect_tls({"127.0.0.1", secure_port()}, client_ctx_, timeout);
  client.hello(kUser, kPass);
  return client;
}

std::optional<LatencyTestBed::Generated> LatencyTestBed::next_generated(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  const std::uint64_t after = sequence_;
  if (!cv_.wait_for(lock, timeout, [&] { return sequence_ > after; })) return std::nullopt;
  for (const auto& g : generated_) {
    if (g.sequence == after + 1) return g;
  }
  return generated_.back();
}

std::vector<LatencyTestBed::Generated> LatencyTestBed::generated_after(std::uint64_t sequence) {
  std::lock_guard lock(mutex_);
  std::vector<Generated> out;
  for (const auto& g : generated_) {
    if (g.sequence > sequence) out.push_back(g);
  }
  return out;
}

std::vector<LatencySample> run_e2e_latency(LatencyTestBed& bed, std::size_t count, std::chrono::milliseconds timeout) {
  std::vector<LatencySample> out;
  out.reserve(count);
  std::optional<snap::SnapClient> client;
  const auto node = bed.value_node();

  for (std::size_t i = 0; i < count; ++i) {
    LatencySample s;
    const auto generated = bed.next_generated(timeout);
    if (!generated) {
      s.timed_out = true;
      s.latency_s = std::chrono::duration<double>(timeout).count();
      out.push_back(std::move(s));
      continue;
    }
    s.returned = generated->value;
    const auto deadline = generated->ts + timeout;
    for (;;) {
      if (SteadyClock::now() >= deadline) {
        s.timed_out = true;
        s.latency_s = std::chrono::duration<double>(timeout).count();
        break;
      }
      try {
        if (!client) client.emplace(bed.connect_secure());
        const auto v = client->read(node).value.variant;
        const auto observed = SteadyClock::now();
        if (v == generated->value) {
          s.received = v;
          s.match = true;
          s.latency_s = std::chrono::duration<double>(observed - generated->ts).count();
          break;
        }
        const auto newer = bed.generated_after(generated->sequence);
        if (std::any_of(newer.begin(), newer.end(), [&](const auto& g) { return g.value == v; })) {
          s.received = v;
          s.latency_s = std::chrono::duration<double>(observed - generated->ts).count();
          break;
        }
      } catch (const snap::StatusError&) {
        // Not ready yet; keep polling.
      } catch (const Error& e) {
        spdlog::debug("secure test client: {}", e.what());
        client.reset();
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

double measure_one_way_seconds(const net::Endpoint& endpoint, std::size_t rounds) {
  auto client = snap::SnapClient::connect_plain(endpoint);
  std::vector<double> rtts;
  rtts.reserve(rounds);
  for (std::size_t i = 0; i < rounds; ++i) {
    const auto t0 = SteadyClock::now();
    client.read_namespace_array();
    rtts.push_back(std::chrono::duration<double>(SteadyClock::now() - t0).count());
  }
  std::sort(rtts.begin(), rtts.end());
  return rtts[rtts.size() / 2] / 2.0;
}

std::vector<store::InternalLatencySample> record_internal_latency(LatencyTestBed& bed, std::size_t count,
                                                                  std::chrono::milliseconds timeout) {
  auto* probe = bed.bridge().probe();
  if (!probe) throw ConfigError("internal latency needs instrumentation enabled");
  probe->clear();
  auto client = bed.connect_secure();
  const auto deadline = SteadyClock::now() + timeout;
  while (probe->sample_count() < count) {
    if (SteadyClock::now() > deadline) {
      throw IoError("only " + std::to_string(probe->sample_count()) + " internal samples within the timeout");
    }
    try {
      client.read(bed.value_node());
    } catch (const snap::StatusError&) {
    }
  }
  auto samples = probe->samples();
  samples.resize(count);
  return samples;
}

SampleTable latency_table(const std::vector<LatencySample>& samples) {
  SampleTable t{{"index", "latency_ms", "match", "timed_out", "returned", "received"}, {}, "latency_ms", "ms"};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::ostringstream ms;
    ms.precision(6);
    ms << std::fixed << s.latency_s * 1e3;
    t.rows.push_back({std::to_string(i), ms.str(), s.match ? "true" : "false", s.timed_out ? "true" : "false",
                      cell(s.returned), cell(s.received)});
  }
  return t;
}

SampleTable internal_table(const std::vector<store::InternalLatencySample>& samples) {
  SampleTable t{{"index", "dt1_ns", "dt2_ns", "t_proc_ns", "t_proc_us"}, {}, "t_proc_us", "us"};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::ostringstream us;
    us.precision(3);
    us << std::fixed << static_cast<double>(s.t_proc_ns) / 1e3;
    t.rows.push_back({std::to_string(i), std::to_string(s.dt1_ns), std::to_string(s.dt2_ns),
                      std::to_string(s.t_proc_ns), us.str()});
  }
  return t;
}

}  // namespace sigma::bench
