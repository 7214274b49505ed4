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

#include "sigma/snap/messages.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace sigma::snap {

namespace {

constexpr std::array<std::string_view, 4> kErrorNames = {"BAD_NODE_UNKNOWN", "BAD_NOT_READY", "BAD_AUTH",
                                                         "BAD_MALFORMED"};
constexpr std::array<std::string_view, 5> kOpNames = {"hello", "read", "attrs", "browse", "subscribe"};

template <typename Int>
Int integer_member(const Json& v, const char* what) {
  if (!v.is_number_integer()) throw ProtocolError(std::string(what) + " must be an integer");
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
      throw ProtocolError(std::string(what) + " out of range");
    }
    return static_cast<Int>(u);
  }
  const auto s = v.get<std::int64_t>();
  if (s < static_cast<std::int64_t>(std::numeric_limits<Int>::min()) ||
      (s > 0 && static_cast<std::uint64_t>(s) > static_cast<std::uint64_t>(std::numeric_limits<Int>::max()))) {
    throw ProtocolError(std::string(what) + " out of range");
  }
  return static_cast<Int>(s);
}

const Json& member(const Json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ProtocolError(std::string("missing member '") + name + "'");
  return *it;
}

std::string string_member(const Json& obj, const char* name) {
  const auto& v = member(obj, name);
  if (!v.is_string()) throw ProtocolError(std::string("member '") + name + "' must be a string");
  return v.get<std::string>();
}

Json node_ref_json(const NodeRef& ref) {
  Json j;
  put_node_id(j, ref.node);
  j["browseName"] = ref.browse_name;
  return j;
}

NodeRef parse_node_ref(const Json& j) {
  if (!j.is_object()) throw ProtocolError("node reference must be an object");
  return NodeRef{get_node_id(j), string_member(j, "browseName")};
}

}  // namespace

std::string_view error_name(ErrorCode code) noexcept { return kErrorNames[static_cast<std::size_t>(code)]; }

std::optional<ErrorCode> parse_error_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kErrorNames.size(); ++i) {
    if (kErrorNames[i] == name) return static_cast<ErrorCode>(i);
  }
  return std::nullopt;
}

StatusError::StatusError(ErrorCode code) : ProtocolError(std::string(error_name(code))), code_(code) {}

std::string_view op_name(Op op) noexcept { return kOpNames[static_cast<std::size_t>(op)]; }

void put_node_id(Json& obj, const core::NodeId& id) {
  obj["ns"] = id.ns();
  if (id.is_numeric()) {
    obj["id"] = id.numeric();
  } else {
    obj["id"] = id.text();
  }
}

core::NodeId get_node_id(const Json& obj) {
  const auto ns = integer_member<std::uint16_t>(member(obj, "ns"), "ns");
  const auto& id = member(obj, "id");
  if (id.is_string()) {
    const auto text = id.get<std::string>();
    if (!core::is_valid_string_identifier(text)) throw ProtocolError("invalid string identifier '" + text + "'");
    return core::NodeId(ns, text);
  }
  return core::NodeId(ns, integer_member<std::uint32_t>(id, "id"));
}

Json encode_request(const Request& r) {
  Json j;
  j["op"] = op_name(r.op);
  j["rid"] = r.rid;
  switch (r.op) {
    case Op::Hello:
      j["user"] = r.user;
      j["pass"] = r.pass;
      break;
    case Op::Read:
    case Op::Attrs:
    case Op::Browse:
      put_node_id(j, r.node);
      break;
    case Op::Subscribe:
      j["interval_ms"] = r.interval_ms;
      break;
  }
  return j;
}

Request parse_request(const Json& body) {
  std::optional<std::uint64_t> rid;
  if (auto it = body.find("rid"); it != body.end() && it->is_number_unsigned()) rid = it->get<std::uint64_t>();
  try {
    if (!rid) throw ProtocolError("missing or invalid rid");
    Request r;
    r.rid = *rid;
    const auto op = string_member(body, "op");
    std::size_t i = 0;
    for (; i < kOpNames.size(); ++i) {
      if (kOpNames[i] == op) break;
    }
    if (i == kOpNames.size()) throw ProtocolError("unknown op '" + op + "'");
    r.op = static_cast<Op>(i);
    switch (r.op) {
      case Op::Hello:
        r.user = string_member(body, "user");
        r.pass = string_member(body, "pass");
        break;
      case Op::Read:
      case Op::Attrs:
      case Op::Browse:
        r.node = get_node_id(body);
        break;
      case Op::Subscribe:
        r.interval_ms = integer_member<std::uint32_t>(member(body, "interval_ms"), "interval_ms");
        if (r.interval_ms == 0) throw ProtocolError("interval_ms must be positive");
        break;
    }
    return r;
  } catch (const MalformedRequest&) {
    throw;
  } catch (const Error& e) {
    throw MalformedRequest(rid, e.what());
  }
}

Json ok_response(std::uint64_t rid) {
  Json j;
  j["rid"] = rid;
  j["ok"] = true;
  return j;
}

Json error_response(std::uint64_t rid, ErrorCode code) {
  Json j;
  j["rid"] = rid;
  j["ok"] = false;
  j["err"] = error_name(code);
  return j;
}

void put_variant(Json& obj, const core::DataVariant& v) {
  obj["type"] = core::kind_name(core::kind_of(v));
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, core::DateTime>) {
          obj["value"] = x.ns;
        } else if constexpr (std::is_same_v<T, float>) {
          obj["value"] = static_cast<double>(x);
        } else {
          obj["value"] = x;
        }
      },
      v);
}

core::DataVariant get_variant(const Json& obj) {
  const auto type = string_member(obj, "type");
  const auto kind = core::parse_kind(type);
  if (!kind) throw ProtocolError("unknown value type '" + type + "'");
  const auto& v = member(obj, "value");
  switch (*kind) {
    case core::DataKind::Boolean:
      if (!v.is_boolean()) throw ProtocolError("Boolean value expected");
      return v.get<bool>();
    case core::DataKind::Int16:
      return integer_member<std::int16_t>(v, "Int16 value");
    case core::DataKind::Int32:
      return integer_member<std::int32_t>(v, "Int32 value");
    case core::DataKind::Int64:
      return integer_member<std::int64_t>(v, "Int64 value");
    case core::DataKind::Float:
      if (v.is_null()) return std::numeric_limits<float>::quiet_NaN();
      if (!v.is_number()) throw ProtocolError("Float value expected");
      return static_cast<float>(v.get<double>());
    case core::DataKind::Double:
      if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
      if (!v.is_number()) throw ProtocolError("Double value expected");
      return v.get<double>();
    case core::DataKind::String:
      if (!v.is_string()) throw ProtocolError("String value expected");
      return v.get<std::string>();
    case core::DataKind::DateTime:
      return core::DateTime{integer_member<std::int64_t>(v, "DateTime value")};
  }
  throw ProtocolError("unreachable value type");
}

Json read_response(std::uint64_t rid, const core::DataValue& value) {
  Json j = ok_response(rid);
  put_variant(j, value.variant);
  j["ts"] = value.source_timestamp_ns;
  return j;
}

Json namespace_array_response(std::uint64_t rid, const std::vector<std::string>& uris) {
  Json j = ok_response(rid);
  j["type"] = "StringArray";
  j["value"] = uris;
  return j;
}

Json attrs_response(std::uint64_t rid, const NodeAttributes& a) {
  Json j = ok_response(rid);
  j["nodeClass"] = a.node_class == NodeClass::Object ? "Object" : "Variable";
  j["displayName"] = a.display_name;
  j["description"] = a.description;
  j["browseName"] = a.browse_name;
  if (a.node_class == NodeClass::Variable) {
    j["dataType"] = a.data_kind ? std::string(core::kind_name(*a.data_kind)) : a.data_type_name;
  }
  return j;
}

NodeAttributes parse_attrs(const Json& body) {
  NodeAttributes a;
  const auto cls = string_member(body, "nodeClass");
  if (cls == "Object") {
    a.node_class = NodeClass::Object;
  } else if (cls == "Variable") {
    a.node_class = NodeClass::Variable;
  } else {
    throw ProtocolError("unknown nodeClass '" + cls + "'");
  }
  a.display_name = string_member(body, "displayName");
  a.description = string_member(body, "description");
  a.browse_name = string_member(body, "browseName");
  if (a.node_class == NodeClass::Variable) {
    a.data_type_name = string_member(body, "dataType");
    a.data_kind = core::parse_kind(a.data_type_name);
  }
  return a;
}

Json browse_response(std::uint64_t rid, const BrowseResult& result) {
  Json j = ok_response(rid);
  j["parent"] = result.parent ? node_ref_json(*result.parent) : Json(nullptr);
  j["children"] = Json::array();
  for (const auto& c : result.children) j["children"].push_back(node_ref_json(c));
  return j;
}

BrowseResult parse_browse(const Json& body) {
  BrowseResult r;
  const auto& parent = member(body, "parent");
  if (!parent.is_null()) r.parent = parse_node_ref(parent);
  const auto& children = member(body, "children");
  if (!children.is_array()) throw ProtocolError("children must be an array");
  for (const auto& c : children) r.children.push_back(parse_node_ref(c));
  return r;
}

Json notify_message(const std::vector<NotifyItem>& items) {
  Json j;
  j["notify"] = Json::array();
  for (const auto& item : items) {
    Json e;
    e["key"] = item.key;
    put_variant(e, item.value.variant);
    e["ts"] = item.value.source_timestamp_ns;
    j["notify"].push_back(std::move(e));
  }
  return j;
}

bool is_notify(const Json& body) { return body.is_object() && body.contains("notify"); }

std::vector<NotifyItem> parse_notify(const Json& body) {
  const auto& list = member(body, "notify");
  if (!list.is_array()) throw ProtocolError("notify must be an array");
  std::vector<NotifyItem> out;
  for (const auto& e : list) {
    NotifyItem item;
    item.key = string_member(e, "key");
    item.value.variant = get_variant(e);
    item.value.source_timestamp_ns = integer_member<std::int64_t>(member(e, "ts"), "ts");
    out.push_back(std::move(item));
  }
  return out;
}

Response expect_ok(const Json& body) {
  if (!body.is_object()) throw ProtocolError("response is not an object");
  Response r;
  r.rid = integer_member<std::uint64_t>(member(body, "rid"), "rid");
  const auto& ok = member(body, "ok");
  if (!ok.is_boolean()) throw ProtocolError("ok must be a boolean");
  if (!ok.get<bool>()) {
    const auto code = parse_error_name(string_member(body, "err"));
    if (!code) throw ProtocolError("unknown error code in response");
    throw StatusError(*code);
  }
  r.body = body;
  return r;
}

}  // namespace sigma::snap
