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
 * @file messages.hpp
 * @brief SNAP request, response and notification bodies.
 *
 * Requests:  {"op":..,"rid":n, params...}
 * Responses: {"rid":n,"ok":true, payload...} | {"rid":n,"ok":false,"err":CODE}
 * Notify:    {"notify":[{"key":..,"type":..,"value":..,"ts":..}, ...]}
 *
 * Keys are emitted in the order shown so frames are byte-reproducible.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sigma/core/model.hpp"
#include "sigma/snap/frame.hpp"

namespace sigma::snap {

enum class ErrorCode { BadNodeUnknown, BadNotReady, BadAuth, BadMalformed };

std::string_view error_name(ErrorCode code) noexcept;
std::optional<ErrorCode> parse_error_name(std::string_view name) noexcept;

/// Peer answered a request with ok=false.
class StatusError : public ProtocolError {
 public:
  explicit StatusError(ErrorCode code);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Op { Hello, Read, Attrs, Browse, Subscribe };

std::string_view op_name(Op op) noexcept;

struct Request {
  Op op = Op::Read;
  std::uint64_t rid = 0;
  core::NodeId node;          ///< read, attrs, browse
  std::string user;           ///< hello
  std::string pass;           ///< hello
  std::uint32_t interval_ms = 0;  ///< subscribe
};

Json encode_request(const Request& request);

/// Request parsing failure; `rid` is known when the body carried a usable one.
class MalformedRequest : public ProtocolError {
 public:
  MalformedRequest(std::optional<std::uint64_t> rid, const std::string& reason)
      : ProtocolError(reason), rid_(rid) {}
  std::optional<std::uint64_t> rid() const noexcept { return rid_; }

 private:
  std::optional<std::uint64_t> rid_;
};

/// Throws MalformedRequest for unknown ops, missing params or bad types.
Request parse_request(const Json& body);

Json ok_response(std::uint64_t rid);
Json error_response(std::uint64_t rid, ErrorCode code);

void put_node_id(Json& obj, const core::NodeId& id);
/// Reads "ns"/"id" members; throws ProtocolError.
core::NodeId get_node_id(const Json& obj);

/// {"type":..,"value":..} members for a typed value.
void put_variant(Json& obj, const core::DataVariant& v);
/// Inverse of put_variant; throws ProtocolError on type mismatch or range overflow.
core::DataVariant get_variant(const Json& obj);

/// read payload: type, value, ts.
Json read_response(std::uint64_t rid, const core::DataValue& value);
/// read payload of (0,2255): {"type":"StringArray","value":[...]}.
Json namespace_array_response(std::uint64_t rid, const std::vector<std::string>& uris);

enum class NodeClass { Object, Variable };

struct NodeAttributes {
  NodeClass node_class = NodeClass::Variable;
  std::string display_name;
  std::string description;
  std::string browse_name;
  /// Variables only. Unknown type names are kept verbatim in `data_type_name`.
  std::optional<core::DataKind> data_kind;
  std::string data_type_name;
};

Json attrs_response(std::uint64_t rid, const NodeAttributes& attrs);
NodeAttributes parse_attrs(const Json& body);

struct NodeRef {
  core::NodeId node;
  std::string browse_name;

  bool operator==(const NodeRef&) const = default;
};

struct BrowseResult {
  std::optional<NodeRef> parent;
  std::vector<NodeRef> children;
};

Json browse_response(std::uint64_t rid, const BrowseResult& result);
BrowseResult parse_browse(const Json& body);

struct NotifyItem {
  std::string key;
  core::DataValue value;
};

Json notify_message(const std::vector<NotifyItem>& items);
bool is_notify(const Json& body);
std::vector<NotifyItem> parse_notify(const Json& body);

/// Response envelope; throws StatusError when ok=false, ProtocolError when malformed.
struct Response {
  std::uint64_t rid = 0;
  Json body;
};
Response expect_ok(const Json& body);

}  // namespace sigma::snap
