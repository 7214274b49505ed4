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

#include "sigma/sim/legacy_sim.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <spdlog/spdlog.h>

#include "sigma/snap/channel.hpp"

namespace sigma::sim {

namespace {

core::NodeId node_from_json(const nlohmann::json& j) {
  const auto ns = j.at("ns").get<std::uint16_t>();
  const auto& id = j.at("id");
  if (id.is_number_unsigned()) return core::NodeId(ns, id.get<std::uint32_t>());
  if (id.is_string()) return core::NodeId(ns, id.get<std::string>());
  throw ConfigError("node id must be an unsigned integer or a string");
}

std::int64_t system_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

template <typename Int>
Int clamp_round(double raw) {
  const double lo = static_cast<double>(std::numeric_limits<Int>::min());
  const double hi = static_cast<double>(std::numeric_limits<Int>::max());
  return static_cast<Int>(std::clamp(std::round(raw), lo, hi));
}

std::string last_segment(const std::string& path) {
  const auto pos = path.rfind('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

std::string parent_path(const std::string& path) {
  const auto pos = path.rfind('/');
  return pos == std::string::npos ? std::string{} : path.substr(0, pos);
}

}  // namespace

core::NodeId objects_folder_id() { return core::NodeId(0, core::kObjectsFolderId); }

LegacyFixture LegacyFixture::from_json(const nlohmann::json& j) try {
  LegacyFixture f;
  f.tick_ms = j.value("tickMs", std::int64_t{50});
  if (f.tick_ms <= 0) throw ConfigError("tickMs must be positive");
  f.namespace_array = j.at("namespaceArray").get<std::vector<std::string>>();
  if (f.namespace_array.empty()) throw ConfigError("namespaceArray must not be empty");
  if (j.contains("folders")) {
    for (const auto& e : j.at("folders")) {
      Folder folder;
      folder.node = node_from_json(e);
      folder.browse_path = e.at("browsePath").get<std::string>();
      folder.display_name = e.value("displayName", last_segment(folder.browse_path));
      folder.description = e.value("description", std::string{});
      f.folders.push_back(std::move(folder));
    }
  }
  for (const auto& e : j.at("nodes")) {
    Variable v;
    v.node = node_from_json(e);
    v.browse_path = e.at("browsePath").get<std::string>();
    v.display_name = e.value("displayName", last_segment(v.browse_path));
    v.description = e.value("description", std::string{});
    v.data_type = e.at("dataType").get<std::string>();
    v.generator = e.contains("generator") ? Generator::from_json(e.at("generator")) : Generator::constant(0);
    v.text = e.value("text", std::string{});
    v.orphan = e.value("orphan", false);
    f.variables.push_back(std::move(v));
  }
  const auto declared = [&](const core::NodeId& id) {
    if (id.ns() >= f.namespace_array.size()) {
      throw ConfigError("fixture node " + id.to_string() + " uses an undeclared namespace");
    }
  };
  for (const auto& folder : f.folders) declared(folder.node);
  for (const auto& v : f.variables) declared(v.node);
  return f;
} catch (const nlohmann::json::exception& e) {
  throw ConfigError(std::string("fixture: ") + e.what());
}

LegacyFixture LegacyFixture::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open fixture '" + file.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("fixture '" + file.string() + "': " + e.what());
  }
}

LegacyFixture LegacyFixture::plc() {
  return from_json(nlohmann::json::parse(R"({
    "tickMs": 50,
    "namespaceArray": ["http://opcfoundation.org/UA/", "urn:sim:plc21", "urn:sim:plc21:machine"],
    "folders": [
      {"ns": 2, "id": 100, "browsePath": "Machine", "description": "Injection moulding unit"},
      {"ns": 2, "id": 200, "browsePath": "Info"}
    ],
    "nodes": [
      {"ns": 2, "id": 1001, "browsePath": "Machine/Temp", "displayName": "Temperature",
       "description": "Melt temperature", "dataType": "Double",
       "generator": {"kind": "sine", "min": 180, "max": 220, "periodMs": 60000}},
      {"ns": 2, "id": 1002, "browsePath": "Machine/Speed", "displayName": "Speed",
       "description": "Screw speed", "dataType": "Int32",
       "generator": {"kind": "sine", "min": 40, "max": 120, "periodMs": 30000}},
      {"ns": 2, "id": 1003, "browsePath": "Machine/Running", "dataType": "Boolean",
       "generator": {"kind": "constant", "value": 1}},
      {"ns": 2, "id": "name", "browsePath": "Info/Name", "dataType": "String", "text": "X20CP1686X"}
    ]
  })"));
}

LegacyFixture LegacyFixture::test_server() {
  return from_json(nlohmann::json::parse(R"({
    "tickMs": 1,
    "namespaceArray": ["http://opcfoundation.org/UA/", "urn:sim:testserver"],
    "nodes": [
      {"ns": 1, "id": 1, "browsePath": "Test/Value", "dataType": "Double",
       "generator": {"kind": "random_per_read", "min": 0, "max": 1000000}}
    ]
  })"));
}

LegacyNodeSim::LegacyNodeSim(LegacyFixture fixture, std::uint64_t seed)
    : fixture_(std::move(fixture)), seed_(seed), epoch_(std::chrono::steady_clock::now()) {
  build_tree();
}

void LegacyNodeSim::build_tree() {
  const auto root = objects_folder_id();
  tree_[root] = Entry{true, 0, std::nullopt, {}, "Objects"};
  std::map<std::string, core::NodeId> by_path{{"", root}};

  const auto check_ns = [&](const core::NodeId& id) {
    if (id.ns() >= fixture_.namespace_array.size()) {
      throw ConfigError("fixture node " + id.to_string() + " uses a namespace outside the array");
    }
  };
  for (std::size_t i = 0; i < fixture_.folders.size(); ++i) {
    const auto& f = fixture_.folders[i];
    check_ns(f.node);
    if (!tree_.emplace(f.node, Entry{true, i, std::nullopt, {}, last_segment(f.browse_path)}).second) {
      throw ConfigError("duplicate fixture node " + f.node.to_string());
    }
    by_path[f.browse_path] = f.node;
  }
  // Folders implied by variable paths but not listed.
  const std::uint16_t auto_ns = fixture_.namespace_array.size() > 1 ? 1 : 0;
  const auto ensure_folder = [&](const std::string& path, auto& self) -> core::NodeId {
    if (auto it = by_path.find(path); it != by_path.end()) return it->second;
    const core::NodeId id(auto_ns, "sim:" + path);
    fixture_.folders.push_back({id, path, last_segment(path), ""});
    tree_[id] = Entry{true, fixture_.folders.size() - 1, std::nullopt, {}, last_segment(path)};
    by_path[path] = id;
    self(parent_path(path), self);
    return id;
  };
  for (const auto& v : fixture_.variables) {
    check_ns(v.node);
    if (!parent_path(v.browse_path).empty()) ensure_folder(parent_path(v.browse_path), ensure_folder);
  }
  for (std::size_t i = 0; i < fixture_.folders.size(); ++i) {
    const auto& f = fixture_.folders[i];
    const auto parent = by_path.at(parent_path(f.browse_path).empty() ? "" : parent_path(f.browse_path));
    tree_[f.node].parent = parent;
    tree_[parent].children.push_back(f.node);
  }
  for (std::size_t i = 0; i < fixture_.variables.size(); ++i) {
    const auto& v = fixture_.variables[i];
    if (tree_.contains(v.node)) throw ConfigError("duplicate fixture node " + v.node.to_string());
    Entry e{false, i, std::nullopt, {}, last_segment(v.browse_path)};
    const auto parent = by_path.at(parent_path(v.browse_path));
    if (!v.orphan) {
      e.parent = parent;
      tree_[parent].children.push_back(v.node);
    }
    tree_[v.node] = std::move(e);
    salts_[v.node] = mix64(std::hash<std::string>{}(v.node.to_string()));
  }
}

void LegacyNodeSim::start(std::uint16_t port, const std::string& host) {
  server_ = std::make_unique<net::TcpServer>(host, port);
  port_ = server_->port();
  server_->start([this](net::Socket s, const net::EventFd& stop) { serve(std::move(s), stop); });
}

void LegacyNodeSim::stop() {
  if (server_) server_->stop();
  server_.reset();
}

void LegacyNodeSim::set_read_observer(ReadObserver observer) {
  std::lock_guard lock(mutex_);
  observer_ = std::move(observer);
}

void LegacyNodeSim::set_value(const core::NodeId& node, core::DataVariant value) {
  std::lock_guard lock(mutex_);
  pinned_[node] = std::move(value);
}

void LegacyNodeSim::clear_values() {
  std::lock_guard lock(mutex_);
  pinned_.clear();
}

std::int64_t LegacyNodeSim::current_tick() const {
  const auto elapsed = std::chrono::steady_clock::now() - epoch_;
  return std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() / fixture_.tick_ms;
}

core::DataVariant LegacyNodeSim::shape(const LegacyFixture::Variable& v, double raw) const {
  const auto kind = core::parse_kind(v.data_type).value_or(core::DataKind::Double);
  switch (kind) {
    case core::DataKind::Boolean:
      return raw != 0.0;
    case core::DataKind::Int16:
      return clamp_round<std::int16_t>(raw);
    case core::DataKind::Int32:
      return clamp_round<std::int32_t>(raw);
    case core::DataKind::Int64:
      return clamp_round<std::int64_t>(raw);
    case core::DataKind::Float:
      return static_cast<float>(raw);
    case core::DataKind::Double:
      return raw;
    case core::DataKind::String:
      return v.text;
    case core::DataKind::DateTime:
      return core::DateTime{system_now_ns()};
  }
  return raw;
}

std::optional<core::DataVariant> LegacyNodeSim::value_at(const core::NodeId& node, std::int64_t tick) const {
  auto it = tree_.find(node);
  if (it == tree_.end() || it->second.is_folder) return std::nullopt;
  const auto& v = fixture_.variables[it->second.index];
  return shape(v, v.generator.at_tick(seed_, salts_.at(node), tick, fixture_.tick_ms));
}

std::optional<core::DataValue> LegacyNodeSim::current(const core::NodeId& node) {
  auto it = tree_.find(node);
  if (it == tree_.end() || it->second.is_folder) return std::nullopt;
  const auto& v = fixture_.variables[it->second.index];
  std::lock_guard lock(mutex_);
  if (auto p = pinned_.find(node); p != pinned_.end()) return core::DataValue{p->second, system_now_ns()};
  double raw = 0;
  if (v.generator.kind() == Generator::Kind::RandomPerRead) {
    raw = v.generator.per_read(seed_, salts_.at(node), draws_[node]++);
  } else {
    raw = v.generator.at_tick(seed_, salts_.at(node), current_tick(), fixture_.tick_ms);
  }
  return core::DataValue{shape(v, raw), system_now_ns()};
}

snap::Json LegacyNodeSim::respond(const snap::Json& body) {
  snap::Request req;
  try {
    req = snap::parse_request(body);
  } catch (const snap::MalformedRequest& e) {
    return snap::error_response(e.rid().value_or(0), snap::ErrorCode::BadMalformed);
  }
  switch (req.op) {
    case snap::Op::Hello:
    case snap::Op::Subscribe:
      return snap::ok_response(req.rid);
    case snap::Op::Read: {
      if (req.node == core::NodeId(0, core::kNamespaceArrayId)) {
        return snap::namespace_array_response(req.rid, fixture_.namespace_array);
      }
      auto value = current(req.node);
      if (!value) return snap::error_response(req.rid, snap::ErrorCode::BadNodeUnknown);
      ++reads_;
      return snap::read_response(req.rid, *value);
    }
    case snap::Op::Attrs: {
      auto it = tree_.find(req.node);
      if (it == tree_.end()) return snap::error_response(req.rid, snap::ErrorCode::BadNodeUnknown);
      snap::NodeAttributes a;
      a.browse_name = it->second.browse_name;
      if (it->first == objects_folder_id()) {
        a.node_class = snap::NodeClass::Object;
        a.display_name = "Objects";
      } else if (it->second.is_folder) {
        const auto& f = fixture_.folders[it->second.index];
        a.node_class = snap::NodeClass::Object;
        a.display_name = f.display_name;
        a.description = f.description;
      } else {
        const auto& v = fixture_.variables[it->second.index];
        a.display_name = v.display_name;
        a.description = v.description;
        a.data_kind = core::parse_kind(v.data_type);
        a.data_type_name = v.data_type;
      }
      return snap::attrs_response(req.rid, a);
    }
    case snap::Op::Browse: {
      auto it = tree_.find(req.node);
      if (it == tree_.end()) return snap::error_response(req.rid, snap::ErrorCode::BadNodeUnknown);
      snap::BrowseResult r;
      if (it->second.parent) r.parent = snap::NodeRef{*it->second.parent, tree_.at(*it->second.parent).browse_name};
      for (const auto& c : it->second.children) r.children.push_back({c, tree_.at(c).browse_name});
      return snap::browse_response(req.rid, r);
    }
  }
  return snap::error_response(req.rid, snap::ErrorCode::BadMalformed);
}

void LegacyNodeSim::serve(net::Socket socket, const net::EventFd& stop) {
  snap::Channel channel(std::make_unique<net::PlainStream>(std::move(socket)));
  try {
    while (!stop.signalled()) {
      auto incoming = channel.receive(net::Millis{-1}, stop.fd());
      if (std::holds_alternative<snap::Channel::Timeout>(incoming)) continue;
      if (std::holds_alternative<snap::Channel::Malformed>(incoming)) {
        channel.send(snap::error_response(0, snap::ErrorCode::BadMalformed));
        continue;
      }
      const auto& body = std::get<snap::Json>(incoming);
      snap::Json reply = respond(body);
      channel.send(reply);
      if (!reply.value("ok", false) || !reply.contains("ts")) continue;
      const auto sent = std::chrono::steady_clock::now();
      ReadObserver observer;
      {
        std::lock_guard lock(mutex_);
        observer = observer_;
      }
      if (observer) {
        const auto node = snap::get_node_id(body);
        observer(node, core::DataValue{snap::get_variant(reply), reply.at("ts").get<std::int64_t>()}, sent);
      }
    }
  } catch (const Error& e) {
    spdlog::debug("legacy sim: connection closed: {}", e.what());
  }
}

}  // namespace sigma::sim
