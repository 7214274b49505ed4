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

#include "sigma/sec/sec_server.hpp"

#include <poll.h>

#include <algorithm>

#include <spdlog/spdlog.h>

namespace sigma::sec {

namespace {

using SteadyClock = std::chrono::steady_clock;

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = path.find('/', start);
    out.push_back(path.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

core::DataVariant to_kind(const core::DataVariant& v, core::DataKind kind) {
  if (core::kind_of(v) == kind) return v;
  // Stored values already carry the descriptor kind; this only guards against drift.
  const core::RawScalar raw = std::visit(
      [](const auto& x) -> core::RawScalar {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, float> || std::is_same_v<T, double>) {
          return static_cast<double>(x);
        } else if constexpr (std::is_same_v<T, core::DateTime>) {
          return core::EpochNanos{x.ns};
        } else {
          return static_cast<std::int64_t>(x);
        }
      },
      v);
  return core::normalize_raw(raw, kind);
}

/// poll() over the connection, the session's notification fd and the server stop fd.
/// Returns a bitmask: 1 socket, 2 notification, 4 stop.
int wait_session(int sock, int notify_fd, int stop_fd) {
  pollfd fds[3] = {{sock, POLLIN, 0}, {stop_fd, POLLIN, 0}, {notify_fd, POLLIN, 0}};
  const nfds_t count = notify_fd >= 0 ? 3 : 2;
  while (::poll(fds, count, -1) < 0) {
    if (errno != EINTR) throw IoError("poll failed");
  }
  return (fds[0].revents ? 1 : 0) | (fds[1].revents ? 4 : 0) | (count == 3 && fds[2].revents ? 2 : 0);
}

}  // namespace

std::string_view mode_name(Mode mode) noexcept { return mode == Mode::PubSub ? "PubSub" : "ClientServer"; }

std::string_view auth_mode_name(AuthMode mode) noexcept {
  return mode == AuthMode::ClientCert ? "ClientCert" : "UserPass";
}

core::NodeId folder_node_id(const core::NamespaceTable& table, const std::string& browse_path) {
  std::uint16_t ns = 0;
  for (std::size_t i = 1; i < table.uris.size(); ++i) {
    if (!table.uris[i].empty() && table.uris[i] != core::kStandardNamespaceUri) {
      ns = static_cast<std::uint16_t>(i);
      break;
    }
  }
  return core::NodeId(ns, "folder:" + browse_path);
}

MirroredAddressSpace build_address_space(const core::DeviceAlias& alias, const store::StructureSnapshot& snapshot) {
  MirroredAddressSpace space;
  space.generation = snapshot.generation;
  space.table = snapshot.table;
  for (auto& uri : space.table.uris) {
    if (uri == core::kStandardNamespaceUri) uri.clear();
  }
  if (!space.table.uris.empty()) space.table.uris[0].clear();

  const core::NodeId root(0, core::kObjectsFolderId);
  space.folders[root] = FolderNode{root, "Objects", "Objects", std::nullopt, {}};
  std::map<std::string, core::NodeId> by_path{{"Objects", root}};

  const auto ensure_folder = [&](const std::vector<std::string>& segments, std::size_t depth) {
    core::NodeId parent = root;
    std::string path = "Objects";
    for (std::size_t i = 1; i < depth; ++i) {
      path += "/" + segments[i];
      auto it = by_path.find(path);
      if (it == by_path.end()) {
        const auto id = folder_node_id(space.table, path);
        space.folders[id] = FolderNode{id, segments[i], path, parent, {}};
        space.folders[parent].children.push_back(id);
        it = by_path.emplace(path, id).first;
      }
      parent = it->second;
    }
    return parent;
  };
  ensure_folder({"Objects", alias.str()}, 2);

  for (const auto& d : snapshot.nodes) {
    const auto ns = d.node_id.ns();
    if (ns == 0 || !space.table.contains_index(ns) || space.table.uris[ns].empty()) {
      throw StructuralError(alias.str() + ": node " + d.node_id.to_string() +
                            " refers to the standard namespace and cannot be mirrored");
    }
    const auto segments = split_path(d.browse_path);
    if (segments.size() < 3 || segments[0] != "Objects" || segments[1] != alias.str()) {
      throw StructuralError(alias.str() + ": browse path '" + d.browse_path + "' is outside Objects/" + alias.str());
    }
    const auto parent = ensure_folder(segments, segments.size() - 1);
    if (space.folders.contains(d.node_id) || space.variables.contains(d.node_id)) {
      throw StructuralError(alias.str() + ": node " + d.node_id.to_string() + " collides with a folder");
    }
    space.variables.emplace(d.node_id, VariableNode{d, core::make_store_key(alias, d.node_id), parent});
    space.folders[parent].children.push_back(d.node_id);
  }
  return space;
}

snap::Json handle_request(const MirroredAddressSpace& space, const store::StoreReader& reader,
                          const snap::Request& req, SteadyClock::time_point received, store::LatencyProbe* probe) {
  using snap::ErrorCode;
  switch (req.op) {
    case snap::Op::Hello:
    case snap::Op::Subscribe:
      return snap::ok_response(req.rid);
    case snap::Op::Read: {
      if (req.node == core::NodeId(0, core::kNamespaceArrayId)) {
        return snap::namespace_array_response(req.rid, space.table.uris);
      }
      auto it = space.variables.find(req.node);
      if (it == space.variables.end()) return snap::error_response(req.rid, ErrorCode::BadNodeUnknown);
      auto value = reader.get_value(it->second.key);
      if (!value) return snap::error_response(req.rid, ErrorCode::BadNotReady);
      if (probe) {
        const auto dt2 = std::chrono::duration_cast<std::chrono::nanoseconds>(SteadyClock::now() - received).count();
        probe->record_read(it->second.key.str(), value->source_timestamp_ns, dt2);
      }
      try {
        value->variant = to_kind(value->variant, it->second.descriptor.data_kind);
      } catch (const ConversionError&) {
        return snap::error_response(req.rid, ErrorCode::BadNotReady);
      }
      return snap::read_response(req.rid, *value);
    }
    case snap::Op::Attrs: {
      snap::NodeAttributes a;
      if (auto v = space.variables.find(req.node); v != space.variables.end()) {
        const auto& d = v->second.descriptor;
        a.node_class = snap::NodeClass::Variable;
        a.display_name = d.display_name;
        a.description = d.description;
        a.browse_name = d.browse_name;
        a.data_kind = d.data_kind;
      } else if (auto f = space.folders.find(req.node); f != space.folders.end()) {
        a.node_class = snap::NodeClass::Object;
        a.display_name = f->second.browse_name;
        a.browse_name = f->second.browse_name;
      } else {
        return snap::error_response(req.rid, ErrorCode::BadNodeUnknown);
      }
      return snap::attrs_response(req.rid, a);
    }
    case snap::Op::Browse: {
      const auto ref = [&](const core::NodeId& id) {
        if (auto f = space.folders.find(id); f != space.folders.end()) return snap::NodeRef{id, f->second.browse_name};
        return snap::NodeRef{id, space.variables.at(id).descriptor.browse_name};
      };
      snap::BrowseResult r;
      if (auto v = space.variables.find(req.node); v != space.variables.end()) {
        r.parent = ref(v->second.parent);
      } else if (auto f = space.folders.find(req.node); f != space.folders.end()) {
        if (f->second.parent) r.parent = ref(*f->second.parent);
        for (const auto& c : f->second.children) r.children.push_back(ref(c));
      } else {
        return snap::error_response(req.rid, ErrorCode::BadNodeUnknown);
      }
      return snap::browse_response(req.rid, r);
    }
  }
  return snap::error_response(req.rid, ErrorCode::BadMalformed);
}

snap::Json build_notify(const MirroredAddressSpace& space, const store::StoreReader& reader) {
  std::vector<snap::NotifyItem> items;
  for (const auto& [id, v] : space.variables) {
    auto value = reader.get_value(v.key);
    if (!value) continue;
    try {
      value->variant = to_kind(value->variant, v.descriptor.data_kind);
    } catch (const ConversionError&) {
      continue;
    }
    items.push_back({v.key.str(), std::move(*value)});
  }
  return snap::notify_message(items);
}

namespace {

net::TlsContext make_tls(const SecServerConfig& c) {
  net::TlsContext::ServerOptions o{c.cert_file, c.key_file, std::nullopt};
  if (c.auth == AuthMode::ClientCert) {
    if (c.trust_dir.empty()) throw StartupError(c.alias.str() + ": client certificate mode needs a trust directory");
    o.trust_dir = c.trust_dir;
  }
  return net::TlsContext::server(o);
}

}  // namespace

SecServer::SecServer(SecServerConfig config, store::StoreReader reader, Options options)
    : config_(std::move(config)),
      reader_(std::move(reader)),
      options_(options),
      tls_(make_tls(config_)),
      server_(config_.host, config_.port) {}

void SecServer::start() {
  startup_thread_ = std::jthread([this](std::stop_token stop) { startup(stop); });
}

void SecServer::startup(std::stop_token stop) {
  const auto timeout = config_.startup_timeout_ms > 0 ? std::chrono::milliseconds(config_.startup_timeout_ms)
                                                      : std::chrono::milliseconds(std::chrono::hours(24 * 365));
  const auto snapshot = reader_.wait_for_structure(config_.alias, timeout, stop);
  if (stop.stop_requested()) return;
  if (!snapshot) {
    set_status(Status::Failed, config_.alias.str() + ": no structure within " +
                                   std::to_string(config_.startup_timeout_ms) + " ms on port " +
                                   std::to_string(port()));
    return;
  }
  try {
    std::lock_guard lock(space_mutex_);
    space_ = std::make_shared<const MirroredAddressSpace>(build_address_space(config_.alias, *snapshot));
  } catch (const Error& e) {
    set_status(Status::Failed, e.what());
    return;
  }
  server_.start([this](net::Socket s, const net::EventFd& stop_event) { serve(std::move(s), stop_event); });
  publish_thread_ = std::jthread([this](std::stop_token st) { publish_loop(st); });
  spdlog::info("{}: secure endpoint serving on port {} ({}, {})", config_.alias.str(), port(),
               mode_name(config_.mode), auth_mode_name(config_.auth));
  set_status(Status::Serving);
}

void SecServer::stop() {
  if (startup_thread_.joinable()) {
    startup_thread_.request_stop();
    startup_thread_.join();
  }
  if (publish_thread_.joinable()) {
    publish_thread_.request_stop();
    subs_cv_.notify_all();
    publish_thread_.join();
  }
  server_.stop();
  std::lock_guard lock(status_mutex_);
  if (status_ != Status::Failed) status_ = Status::Stopped;
  status_cv_.notify_all();
}

void SecServer::set_status(Status s, std::string reason) {
  if (s == Status::Failed) spdlog::error("{}", reason);
  std::lock_guard lock(status_mutex_);
  status_ = s;
  failure_ = std::move(reason);
  status_cv_.notify_all();
}

SecServer::Status SecServer::status() const {
  std::lock_guard lock(status_mutex_);
  return status_;
}

std::string SecServer::failure() const {
  std::lock_guard lock(status_mutex_);
  return failure_;
}

SecServer::Status SecServer::wait_ready(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(status_mutex_);
  status_cv_.wait_for(lock, timeout, [&] { return status_ != Status::Waiting; });
  return status_;
}

std::size_t SecServer::subscriber_count() const {
  std::lock_guard lock(subs_mutex_);
  return subscribers_.size();
}

std::shared_ptr<const MirroredAddressSpace> SecServer::address_space() {
  std::lock_guard lock(space_mutex_);
  const auto generation = reader_.structure_generation(config_.alias);
  if (space_ && generation != space_->generation) {
    if (auto snapshot = reader_.snapshot_structure(config_.alias)) {
      try {
        space_ = std::make_shared<const MirroredAddressSpace>(build_address_space(config_.alias, *snapshot));
      } catch (const Error& e) {
        spdlog::error("{}: keeping previous address space: {}", config_.alias.str(), e.what());
      }
    }
  }
  return space_;
}

std::shared_ptr<SecServer::Subscriber> SecServer::subscribe(std::chrono::milliseconds interval) {
  auto sub = std::make_shared<Subscriber>();
  sub->interval = interval;
  sub->next_due = SteadyClock::now() + interval;
  {
    std::lock_guard lock(subs_mutex_);
    subscribers_.push_back(sub);
  }
  subs_cv_.notify_all();
  return sub;
}

void SecServer::unsubscribe(const std::shared_ptr<Subscriber>& sub) {
  std::lock_guard lock(subs_mutex_);
  subscribers_.remove(sub);
}

void SecServer::publish_loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    std::vector<std::shared_ptr<Subscriber>> due;
    auto next_wake = SteadyClock::now() + std::chrono::milliseconds(100);
    {
      std::unique_lock lock(subs_mutex_);
      const auto now = SteadyClock::now();
      for (auto& s : subscribers_) {
        if (s->next_due <= now) {
          due.push_back(s);
          // Fixed-rate schedule; a late tick does not queue catch-up messages.
          s->next_due = std::max(s->next_due + s->interval, now);
        }
        next_wake = std::min(next_wake, s->next_due);
      }
    }
    if (!due.empty()) {
      const auto space = address_space();
      const auto message = build_notify(*space, reader_);
      for (auto& s : due) {
        {
          std::lock_guard lock(s->mutex);
          if (s->queue.size() >= kNotifyQueueLimit) {
            s->queue.pop_front();
            ++dropped_;
          }
          s->queue.push_back(message);
        }
        s->wake.signal();
      }
    }
    std::unique_lock lock(subs_mutex_);
    subs_cv_.wait_until(lock, stop, next_wake, [] { return false; });
  }
}

void SecServer::serve(net::Socket socket, const net::EventFd& stop) {
  std::unique_ptr<net::TlsStream> tls;
  try {
    tls = net::tls_accept(tls_, std::move(socket), options_.handshake_timeout);
  } catch (const Error& e) {
    spdlog::debug("{}: rejected connection: {}", config_.alias.str(), e.what());
    return;
  }
  const bool cert_authenticated = config_.auth == AuthMode::ClientCert && tls->verified_peer().has_value();
  snap::Channel channel(std::move(tls));

  bool authenticated = cert_authenticated;
  int failed_hellos = 0;
  std::optional<std::uint64_t> last_rid;
  std::shared_ptr<Subscriber> sub;
  struct Unsubscribe {
    SecServer* self;
    std::shared_ptr<Subscriber>* sub;
    ~Unsubscribe() {
      if (*sub) self->unsubscribe(*sub);
    }
  } unsubscribe_guard{this, &sub};

  const auto start_subscription = [&](std::int64_t interval_ms) {
    if (sub) {
      std::lock_guard lock(subs_mutex_);
      sub->interval = std::chrono::milliseconds(interval_ms);
      return;
    }
    sub = subscribe(std::chrono::milliseconds(interval_ms));
  };
  if (authenticated && config_.mode == Mode::PubSub) start_subscription(config_.publish_interval_ms);

  try {
    for (;;) {
      if (!channel.stream().has_buffered()) {
        const int ready = wait_session(channel.stream().fd(), sub ? sub->wake.fd() : -1, stop.fd());
        if (ready & 4) return;
        if (ready & 2) {
          sub->wake.clear();
          std::deque<snap::Json> pending;
          {
            std::lock_guard lock(sub->mutex);
            pending.swap(sub->queue);
          }
          for (const auto& m : pending) channel.send(m);
        }
        if (!(ready & 1)) continue;
      }
      auto incoming = channel.receive(net::Millis{0});
      const auto received = SteadyClock::now();
      if (std::holds_alternative<snap::Channel::Timeout>(incoming)) continue;
      if (std::holds_alternative<snap::Channel::Malformed>(incoming)) {
        channel.send(snap::error_response(0, snap::ErrorCode::BadMalformed));
        continue;
      }
      const auto& body = std::get<snap::Json>(incoming);
      snap::Request req;
      try {
        req = snap::parse_request(body);
      } catch (const snap::MalformedRequest& e) {
        channel.send(snap::error_response(e.rid().value_or(0), snap::ErrorCode::BadMalformed));
        continue;
      }
      if (last_rid && req.rid <= *last_rid) {
        channel.send(snap::error_response(req.rid, snap::ErrorCode::BadMalformed));
        continue;
      }
      last_rid = req.rid;

      if (req.op == snap::Op::Hello) {
        if (authenticated) {
          channel.send(snap::ok_response(req.rid));
          continue;
        }
        const bool match = config_.auth == AuthMode::UserPass && !config_.user.empty() &&
                           req.user == config_.user && req.pass == config_.pass;
        if (match) {
          authenticated = true;
          channel.send(snap::ok_response(req.rid));
          if (config_.mode == Mode::PubSub) start_subscription(config_.publish_interval_ms);
          continue;
        }
        channel.send(snap::error_response(req.rid, snap::ErrorCode::BadAuth));
        if (++failed_hellos >= kMaxHelloAttempts) return;
        continue;
      }
      if (!authenticated) {
        channel.send(snap::error_response(req.rid, snap::ErrorCode::BadAuth));
        continue;
      }
      if (req.op == snap::Op::Subscribe) {
        start_subscription(req.interval_ms > 0 ? req.interval_ms : config_.publish_interval_ms);
        channel.send(snap::ok_response(req.rid));
        continue;
      }
      const auto space = address_space();
      auto reply = handle_request(*space, reader_, req, received, options_.probe);
      if (req.op == snap::Op::Read && reply.value("ok", false)) ++reads_;
      channel.send(reply);
    }
  } catch (const Error& e) {
    spdlog::debug("{}: session ended: {}", config_.alias.str(), e.what());
  }
}

}  // namespace sigma::sec
