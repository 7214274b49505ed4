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

#include "sigma/app/config.hpp"

#include <fstream>
#include <set>

namespace sigma::app {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// JSON value plus its location, for error messages.
class Node {
 public:
  Node(const json& value, std::string file, std::string path)
      : value_(value), file_(std::move(file)), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& reason) const {
    throw ConfigError(file_ + ": " + (path_.empty() ? "/" : path_) + ": " + reason);
  }

  const json& raw() const noexcept { return value_; }
  bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

  Node at(const char* key) const {
    expect_object();
    if (!value_.contains(key)) Node(value_, file_, path_ + "/" + key).fail("required member is missing");
    return Node(value_.at(key), file_, path_ + "/" + key);
  }
  Node at(std::size_t i) const { return Node(value_.at(i), file_, path_ + "/" + std::to_string(i)); }

  void expect_object() const {
    if (!value_.is_object()) fail("expected an object");
  }
  std::size_t array_size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }
  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }
  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) const {
    if (!value_.is_number_integer()) fail("expected an integer");
    const auto v = value_.get<std::int64_t>();
    if (v < lo || v > hi) fail("must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  template <typename F>
  auto guard(F&& f) const -> decltype(f()) {
    try {
      return f();
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }

 private:
  const json& value_;
  std::string file_;
  std::string path_;
};

core::NodeId node_id(const Node& n) {
  const auto ns = static_cast<std::uint16_t>(n.at("ns").integer(0, 65535));
  const Node id = n.at("id");
  if (id.raw().is_number_unsigned()) return core::NodeId(ns, static_cast<std::uint32_t>(id.integer(0, UINT32_MAX)));
  return id.guard([&] { return core::NodeId(ns, id.string()); });
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

sec::Mode parse_mode(const Node& n) {
  const auto m = n.string();
  if (m == "ClientServer") return sec::Mode::ClientServer;
  if (m == "PubSub") return sec::Mode::PubSub;
  n.fail("mode must be \"ClientServer\" or \"PubSub\"");
}

json node_json(const core::NodeId& id) {
  json j{{"ns", id.ns()}};
  if (id.is_numeric()) {
    j["id"] = id.numeric();
  } else {
    j["id"] = id.text();
  }
  return j;
}

}  // namespace

ClientConfiguration parse_client_config(const json& j, const std::string& file, [[maybe_unused]] const fs::path& base_dir) {
  ClientConfiguration out;
  const Node root(j, file, "");
  const Node devices = root.at("devices");
  std::set<std::string> aliases;
  for (std::size_t i = 0; i < devices.array_size(); ++i) {
    const Node d = devices.at(i);
    insec::InsecEndpointConfig c;
    const Node alias = d.at("alias");
    c.alias = alias.guard([&] { return core::DeviceAlias(alias.string()); });
    if (!aliases.insert(c.alias.str()).second) alias.fail("duplicate alias '" + c.alias.str() + "'");
    const Node protocol = d.at("protocol");
    const auto p = protocol.string();
    if (p == "snap") {
      c.protocol = insec::Protocol::SnapLegacy;
    } else if (p == "modbus") {
      c.protocol = insec::Protocol::ModbusTcp;
    } else {
      protocol.fail("protocol must be \"snap\" or \"modbus\"");
    }
    const Node endpoint = d.at("endpoint");
    c.endpoint = endpoint.guard([&] { return net::Endpoint::parse(endpoint.string()); });
    c.poll_interval_ms = d.has("pollIntervalMs") ? d.at("pollIntervalMs").integer(1, 86'400'000) : kDefaultPollIntervalMs;

    if (c.protocol == insec::Protocol::SnapLegacy) {
      if (d.has("registers")) d.at("registers").fail("registers are only valid for modbus devices");
      const Node nodes = d.at("nodes");
      if (nodes.raw().is_string()) {
        if (nodes.string() != "all") nodes.fail("expected \"all\" or a list of node ids");
        c.select_all = true;
      } else {
        for (std::size_t k = 0; k < nodes.array_size(); ++k) c.nodes.push_back(node_id(nodes.at(k)));
      }
    } else {
      if (d.has("nodes")) d.at("nodes").fail("nodes are only valid for snap devices");
      c.unit_id = d.has("unitId") ? static_cast<std::uint8_t>(d.at("unitId").integer(0, 255)) : 1;
      const Node regs = d.at("registers");
      for (std::size_t k = 0; k < regs.array_size(); ++k) {
        const Node r = regs.at(k);
        modbus::RegisterBinding b;
        b.address = static_cast<std::uint16_t>(r.at("address").integer(0, 65535));
        if (r.has("scale")) {
          const Node scale = r.at("scale");
          const auto text = scale.raw().is_number() ? scale.raw().dump() : scale.string();
          b.scale = scale.guard([&] { return modbus::DecimalScale::parse(text); });
        }
        const Node type = r.at("type");
        const auto kind = core::parse_kind(type.string());
        if (!kind) type.fail("unknown data type '" + type.string() + "'");
        b.target_kind = *kind;
        b.node_id = node_id(r);
        b.browse_name = r.at("browseName").string();
        b.is_signed = r.has("signed") && r.at("signed").boolean();
        r.guard([&] {
          modbus::validate_binding(b);
          return 0;
        });
        c.registers.push_back(std::move(b));
      }
    }
    d.guard([&] {
      insec::validate(c);
      return 0;
    });
    out.devices.push_back(std::move(c));
  }
  return out;
}

ServerConfiguration parse_server_config(const json& j, const std::string& file, const fs::path& base_dir) {
  ServerConfiguration out;
  const Node root(j, file, "");
  root.expect_object();
  if (root.has("mode")) out.global_mode = parse_mode(root.at("mode"));
  out.mirror_root = resolve(base_dir, root.has("mirrorRoot") ? root.at("mirrorRoot").string() : "config");
  out.instrumentation = root.has("instrumentation") && root.at("instrumentation").boolean();

  std::optional<std::pair<fs::path, fs::path>> default_tls;
  if (root.has("tls")) {
    const Node tls = root.at("tls");
    default_tls = {resolve(base_dir, tls.at("cert").string()), resolve(base_dir, tls.at("key").string())};
  }

  const Node servers = root.at("servers");
  for (std::size_t i = 0; i < servers.array_size(); ++i) {
    const Node s = servers.at(i);
    sec::SecServerConfig c;
    const Node alias = s.at("alias");
    c.alias = alias.guard([&] { return core::DeviceAlias(alias.string()); });
    c.port = static_cast<std::uint16_t>(s.at("port").integer(1, 65535));
    if (s.has("host")) c.host = s.at("host").string();
    if (s.has("mode")) c.mode = parse_mode(s.at("mode"));
    if (out.global_mode) c.mode = *out.global_mode;
    if (s.has("publishIntervalMs")) c.publish_interval_ms = s.at("publishIntervalMs").integer(1, 86'400'000);
    if (s.has("startupTimeoutMs")) c.startup_timeout_ms = s.at("startupTimeoutMs").integer(0, INT64_MAX);
    if (s.has("tls")) {
      const Node tls = s.at("tls");
      c.cert_file = resolve(base_dir, tls.at("cert").string());
      c.key_file = resolve(base_dir, tls.at("key").string());
    } else if (default_tls) {
      c.cert_file = default_tls->first;
      c.key_file = default_tls->second;
    } else {
      s.fail("no TLS material configured for this server");
    }
    const Node auth = s.at("auth");
    const Node mode = auth.at("mode");
    const auto m = mode.string();
    if (m == "cert") {
      c.auth = sec::AuthMode::ClientCert;
      c.trust_dir = resolve(base_dir, auth.at("trustDir").string());
    } else if (m == "userpass") {
      c.auth = sec::AuthMode::UserPass;
      c.user = auth.at("user").string();
      c.pass = auth.at("pass").string();
      if (c.user.empty()) auth.at("user").fail("user must not be empty");
    } else {
      mode.fail("auth mode must be \"cert\" or \"userpass\"");
    }
    out.servers.push_back(std::move(c));
  }
  return out;
}

void cross_validate(const Configs& configs) {
  std::set<std::string> clients;
  for (const auto& d : configs.client.devices) clients.insert(d.alias.str());
  std::set<std::string> aliases;
  std::set<std::uint16_t> port_numbers;
  for (const auto& s : configs.server.servers) {
    if (!clients.contains(s.alias.str())) {
      throw ConfigError("server alias '" + s.alias.str() + "' has no entry in the client configuration");
    }
    if (!aliases.insert(s.alias.str()).second) {
      throw ConfigError("alias '" + s.alias.str() + "' has more than one secure server");
    }
    if (!port_numbers.insert(s.port).second) {
      throw ConfigError("port " + std::to_string(s.port) + " is used by more than one secure server");
    }
  }
}

Configs load_configs(const fs::path& client_path, const fs::path& server_path) {
  const auto read = [](const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError(p.string() + ": cannot open file");
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(p.string() + ": byte " + std::to_string(e.byte) + ": invalid JSON");
    }
  };
  Configs c;
  c.client = parse_client_config(read(client_path), client_path.string(), client_path.parent_path());
  c.server = parse_server_config(read(server_path), server_path.string(), server_path.parent_path());
  cross_validate(c);
  return c;
}

json to_json(const ClientConfiguration& c) {
  json devices = json::array();
  for (const auto& d : c.devices) {
    json e{{"alias", d.alias.str()},
           {"protocol", d.protocol == insec::Protocol::SnapLegacy ? "snap" : "modbus"},
           {"endpoint", d.endpoint.to_string()},
           {"pollIntervalMs", d.poll_interval_ms}};
    if (d.protocol == insec::Protocol::SnapLegacy) {
      if (d.select_all) {
        e["nodes"] = "all";
      } else {
        e["nodes"] = json::array();
        for (const auto& n : d.nodes) e["nodes"].push_back(node_json(n));
      }
    } else {
      e["unitId"] = d.unit_id;
      e["registers"] = json::array();
      for (const auto& b : d.registers) {
        json r{{"address", b.address}, {"scale", b.scale.to_string()}, {"type", core::kind_name(b.target_kind)}};
        r.update(node_json(b.node_id));
        r["browseName"] = b.browse_name;
        r["signed"] = b.is_signed;
        e["registers"].push_back(std::move(r));
      }
    }
    devices.push_back(std::move(e));
  }
  return {{"devices", devices}};
}

json to_json(const ServerConfiguration& c) {
  json servers = json::array();
  for (const auto& s : c.servers) {
    json e{{"alias", s.alias.str()},
           {"port", s.port},
           {"host", s.host},
           {"mode", sec::mode_name(s.mode)},
           {"publishIntervalMs", s.publish_interval_ms},
           {"startupTimeoutMs", s.startup_timeout_ms},
           {"tls", {{"cert", s.cert_file.string()}, {"key", s.key_file.string()}}}};
    if (s.auth == sec::AuthMode::ClientCert) {
      e["auth"] = {{"mode", "cert"}, {"trustDir", s.trust_dir.string()}};
    } else {
      e["auth"] = {{"mode", "userpass"}, {"user", s.user}, {"pass", s.pass}};
    }
    servers.push_back(std::move(e));
  }
  json j{{"mirrorRoot", c.mirror_root.string()}, {"instrumentation", c.instrumentation}, {"servers", servers}};
  if (c.global_mode) j["mode"] = sec::mode_name(*c.global_mode);
  return j;
}

}  // namespace sigma::app
