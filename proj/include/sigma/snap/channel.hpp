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

#include <deque>
#include <memory>
#include <optional>
#include <variant>

#include "sigma/net/socket.hpp"
#include "sigma/net/tls.hpp"
#include "sigma/snap/frame.hpp"
#include "sigma/snap/messages.hpp"

namespace sigma::snap {

/// Frame-level duplex over a byte stream.
class Channel {
 public:
  struct Timeout {};
  struct Malformed {
    std::string reason;
  };
  using Incoming = std::variant<Timeout, Json, Malformed>;

  explicit Channel(std::unique_ptr<net::Stream> stream) : stream_(std::move(stream)) {}

  /// Next frame, Timeout when nothing complete arrived in time (or `wake_fd`
  /// fired). Throws ProtocolError on oversize frames and IoError on EOF.
  Incoming receive(net::Millis timeout, int wake_fd = -1);
  void send(const Json& body);

  net::Stream& stream() noexcept { return *stream_; }
  void shutdown() noexcept { stream_->shutdown(); }

 private:
  std::unique_ptr<net::Stream> stream_;
  FrameReader reader_;
};

/// Read value as returned by a SNAP peer.
struct ReadValue {
  core::DataValue value;
};

/// Synchronous SNAP client used by the insecure-side workers, the test
/// clients and the benchmark harness. One outstanding request at a time;
/// notifications arriving in between are queued.
class SnapClient {
 public:
  explicit SnapClient(std::unique_ptr<net::Stream> stream, net::Millis timeout = net::Millis{2000})
      : channel_(std::move(stream)), timeout_(timeout) {}

  /// Plaintext connection (legacy side).
  static SnapClient connect_plain(const net::Endpoint& to, net::Millis timeout = net::Millis{2000});
  /// TLS connection (secure side).
  static SnapClient connect_tls(const net::Endpoint& to, const net::TlsContext& ctx,
                                net::Millis timeout = net::Millis{2000});

  /// Each call throws StatusError for ok=false, ProtocolError for protocol
  /// violations and IoError for transport failures or timeouts.
  void hello(const std::string& user, const std::string& pass);
  ReadValue read(const core::NodeId& node);
  std::vector<std::string> read_namespace_array();
  NodeAttributes attributes(const core::NodeId& node);
  BrowseResult browse(const core::NodeId& node);
  void subscribe(std::uint32_t interval_ms);
  std::optional<std::vector<NotifyItem>> next_notification(net::Millis timeout);

  /// Sends an arbitrary body with the next rid and returns the raw response.
  Json call_raw(Json body);

  Channel& channel() noexcept { return channel_; }

 private:
  Json call(Json body);

  Channel channel_;
  net::Millis timeout_;
  std::uint64_t next_rid_ = 1;
  std::deque<Json> notifications_;
};

}  // namespace sigma::snap
