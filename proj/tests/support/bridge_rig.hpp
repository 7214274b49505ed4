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
#include <string>

#include "sigma/app/bridge.hpp"
#include "sigma/bench/harness.hpp"
#include "sigma/net/tls.hpp"
#include "sigma/snap/channel.hpp"
#include "test_support.hpp"

namespace sigma::testing {

inline constexpr const char* kRigUser = "operator";
inline constexpr const char* kRigPass = "s3cret";

/// In-process bridge assembly against simulators on ephemeral ports.
class BridgeRig {
 public:
  explicit BridgeRig(const std::string& label = "rig")
      : dir_(label),
        tls_(bench::TlsMaterial::create(dir_ / "tls")),
        client_ctx_(net::TlsContext::client({tls_.cert, "localhost", std::nullopt, std::nullopt})) {
    configs_.server.mirror_root = dir_ / "config";
  }
  ~BridgeRig() { stop(); }

  insec::InsecEndpointConfig& add_snap_device(const std::string& alias, std::uint16_t port,
                                              std::vector<core::NodeId> nodes, std::int64_t poll_ms = 20) {
    insec::InsecEndpointConfig c;
    c.alias = core::DeviceAlias(alias);
    c.endpoint = {"127.0.0.1", port};
    c.poll_interval_ms = poll_ms;
    c.nodes = std::move(nodes);
    configs_.client.devices.push_back(c);
    add_server(alias);
    return configs_.client.devices.back();
  }

  /// Register 0 as Temperature (0.1 scale, Double), register 1 as FanRPM.
  insec::InsecEndpointConfig& add_cooler(const std::string& alias, std::uint16_t port, std::int64_t poll_ms = 20) {
    insec::InsecEndpointConfig c;
    c.alias = core::DeviceAlias(alias);
    c.protocol = insec::Protocol::ModbusTcp;
    c.endpoint = {"127.0.0.1", port};
    c.poll_interval_ms = poll_ms;
    c.registers = {{0, modbus::DecimalScale::parse("0.1"), core::DataKind::Double, core::NodeId(1, "temp"),
                    "Temperature"},
                   {1, modbus::DecimalScale::parse("1"), core::DataKind::Int32, core::NodeId(1, "rpm"), "FanRPM"}};
    configs_.client.devices.push_back(c);
    add_server(alias);
    return configs_.client.devices.back();
  }

  sec::SecServerConfig& server(const std::string& alias) {
    for (auto& s : configs_.server.servers) {
      if (s.alias.str() == alias) return s;
    }
    throw std::out_of_range(alias);
  }

  void start(std::chrono::milliseconds timeout = std::chrono::milliseconds(10000)) {
    bridge_ = std::make_unique<app::Bridge>(configs_);
    bridge_->start();
    if (!bridge_->wait_serving(timeout)) throw StartupError("rig bridge did not start: " + bridge_->failure());
  }

  void stop() {
    if (bridge_) bridge_->stop();
  }

  std::uint16_t port_of(const std::string& alias) const {
    for (const auto& s : bridge_->servers()) {
      if (s->config().alias.str() == alias) return s->port();
    }
    throw std::out_of_range(alias);
  }

  snap::SnapClient connect(const std::string& alias) const {
    auto client = snap::SnapClient::connect_tls({"127.0.0.1", port_of(alias)}, client_ctx_);
    client.hello(kRigUser, kRigPass);
    return client;
  }

  /// Polls the secure endpoint until `pred(value)` holds.
  template <typename Pred>
  bool wait_value(const std::string& alias, const core::NodeId& node, Pred pred,
                  std::chrono::milliseconds timeout) const {
    auto client = connect(alias);
    return wait_until(
        [&] {
          try {
            return pred(client.read(node).value);
          } catch (const snap::StatusError&) {
            return false;
          }
        },
        timeout, std::chrono::milliseconds(2));
  }

  app::Bridge& bridge() { return *bridge_; }
  app::Configs& configs() { return configs_; }
  const std::filesystem::path& mirror_root() const { return configs_.server.mirror_root; }
  const bench::TlsMaterial& tls() const { return tls_; }
  const net::TlsContext& client_context() const { return client_ctx_; }
  const TempDir& dir() const { return dir_; }

 private:
  void add_server(const std::string& alias) {
    sec::SecServerConfig s;
    s.alias = core::DeviceAlias(alias);
    s.host = "127.0.0.1";
    s.port = 0;
    s.cert_file = tls_.cert;
    s.key_file = tls_.key;
    s.auth = sec::AuthMode::UserPass;
    s.user = kRigUser;
    s.pass = kRigPass;
    s.startup_timeout_ms = 10000;
    configs_.server.servers.push_back(s);
  }

  TempDir dir_;
  bench::TlsMaterial tls_;
  net::TlsContext client_ctx_;
  app::Configs configs_;
  std::unique_ptr<app::Bridge> bridge_;
};

}  // namespace sigma::testing
