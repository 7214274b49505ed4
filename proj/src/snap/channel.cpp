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

#include "sigma/snap/channel.hpp"

#include <array>
#include <chrono>

namespace sigma::snap {

Channel::Incoming Channel::receive(net::Millis timeout, int wake_fd) {
  const bool forever = timeout.count() < 0;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    DecodeResult r = reader_.next();
    switch (r.status) {
      case DecodeResult::Status::Complete:
        return std::move(r.body);
      case DecodeResult::Status::Malformed:
        return Malformed{r.error};
      case DecodeResult::Status::Oversize:
        throw ProtocolError(r.error);
      case DecodeResult::Status::NeedMore:
        break;
    }
    const auto left =
        forever ? net::Millis{-1}
                : std::chrono::duration_cast<net::Millis>(deadline - std::chrono::steady_clock::now());
    if (!forever && left.count() < 0) return Timeout{};
    if (!stream_->has_buffered() && !net::wait_readable(stream_->fd(), left, wake_fd)) return Timeout{};
    if (wake_fd >= 0 && !stream_->has_buffered() && !net::wait_readable(stream_->fd(), net::Millis{0})) {
      return Timeout{};
    }
    std::array<std::uint8_t, 16384> buf{};
    const std::size_t n = stream_->read_some(buf, left);
    if (n == 0) continue;
    reader_.append(std::span<const std::uint8_t>(buf.data(), n));
  }
}

void Channel::send(const Json& body) { stream_->write_all(encode_frame(body)); }

SnapClient SnapClient::connect_plain(const net::Endpoint& to, net::Millis timeout) {
  auto socket = net::connect_tcp(to, timeout);
  socket.set_io_timeout(timeout);
  return SnapClient(std::make_unique<net::PlainStream>(std::move(socket)), timeout);
}

SnapClient SnapClient::connect_tls(const net::Endpoint& to, const net::TlsContext& ctx, net::Millis timeout) {
  return SnapClient(net::tls_connect(ctx, net::connect_tcp(to, timeout), timeout), timeout);
}

Json SnapClient::call_raw(Json body) {
  const std::uint64_t rid = next_rid_++;
  Json req;
  // rid follows op for byte-stable requests.
  for (auto it = body.begin(); it != body.end(); ++it) {
    req[it.key()] = it.value();
    if (it.key() == "op") req["rid"] = rid;
  }
  if (!req.contains("rid")) req["rid"] = rid;
  channel_.send(req);

  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto left = std::chrono::duration_cast<net::Millis>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw IoError("SNAP request timed out");
    auto incoming = channel_.receive(left);
    if (std::holds_alternative<Channel::Timeout>(incoming)) continue;
    if (auto* bad = std::get_if<Channel::Malformed>(&incoming)) throw ProtocolError("malformed response: " + bad->reason);
    Json& msg = std::get<Json>(incoming);
    if (is_notify(msg)) {
      notifications_.push_back(std::move(msg));
      continue;
    }
    auto rid_it = msg.find("rid");
    if (rid_it == msg.end() || !rid_it->is_number_unsigned()) throw ProtocolError("response without rid");
    if (rid_it->get<std::uint64_t>() != rid) {
      throw ProtocolError("response rid " + std::to_string(rid_it->get<std::uint64_t>()) + " does not echo " +
                          std::to_string(rid));
    }
    return msg;
  }
}

Json SnapClient::call(Json body) { return expect_ok(call_raw(std::move(body))).body; }

void SnapClient::hello(const std::string& user, const std::string& pass) {
  Json j;
  j["op"] = "hello";
  j["user"] = user;
  j["pass"] = pass;
  call(std::move(j));
}

namespace {
Json node_request(const char* op, const core::NodeId& node) {
  Json j;
  j["op"] = op;
  put_node_id(j, node);
  return j;
}
}  // namespace

ReadValue SnapClient::read(const core::NodeId& node) {
  const Json body = call(node_request("read", node));
  ReadValue out;
  out.value.variant = get_variant(body);
  auto ts = body.find("ts");
  if (ts != body.end() && ts->is_number_integer()) out.value.source_timestamp_ns = ts->get<std::int64_t>();
  return out;
}

std::vector<std::string> SnapClient::read_namespace_array() {
  const Json body = call(node_request("read", core::NodeId(0, core::kNamespaceArrayId)));
  auto type = body.find("type");
  auto value = body.find("value");
  if (type == body.end() || *type != "StringArray" || value == body.end() || !value->is_array()) {
    throw ProtocolError("namespace array response is not a StringArray");
  }
  std::vector<std::string> uris;
  for (const auto& u : *value) {
    if (!u.is_string()) throw ProtocolError("namespace array holds a non-string entry");
    uris.push_back(u.get<std::string>());
  }
  return uris;
}

NodeAttributes SnapClient::attributes(const core::NodeId& node) { return parse_attrs(call(node_request("attrs", node))); }

BrowseResult SnapClient::browse(const core::NodeId& node) { return parse_browse(call(node_request("browse", node))); }

void SnapClient::subscribe(std::uint32_t interval_ms) {
  Json j;
  j["op"] = "subscribe";
  j["interval_ms"] = interval_ms;
  call(std::move(j));
}

std::optional<std::vector<NotifyItem>> SnapClient::next_notification(net::Millis timeout) {
  if (notifications_.empty()) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (notifications_.empty()) {
      const auto left = std::chrono::duration_cast<net::Millis>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      auto incoming = channel_.receive(left);
      if (auto* msg = std::get_if<Json>(&incoming); msg && is_notify(*msg)) notifications_.push_back(std::move(*msg));
    }
  }
  Json msg = std::move(notifications_.front());
  notifications_.pop_front();
  return parse_notify(msg);
}

}  // namespace sigma::snap
