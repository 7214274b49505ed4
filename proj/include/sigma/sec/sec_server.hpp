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
 * @file sec_server.hpp
 * @brief Authenticated SNAP-over-TLS endpoint serving one device's mirror.
 *
 * The only data source is a StoreReader. The port is bound at construction
 * but connections are refused until the device's structure is in the store.
 */

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "sigma/core/model.hpp"
#include "sigma/net/server.hpp"
#include "sigma/net/tls.hpp"
#include "sigma/snap/channel.hpp"
#include "sigma/store/data_store.hpp"
#include "sigma/store/latency_probe.hpp"

namespace sigma::sec {

inline constexpr std::uint16_t kDefaultSecurePort = 4841;
inline constexpr std::size_t kNotifyQueueLimit = 16;
inline constexpr int kMaxHelloAttempts = 3;

enum class Mode { ClientServer, PubSub };
enum class AuthMode { ClientCert, UserPass };

std::string_view mode_name(Mode mode) noexcept;
std::string_view auth_mode_name(AuthMode mode) noexcept;

struct SecServerConfig {
  core::DeviceAlias alias{"device"};
  std::string host = "0.0.0.0";
  std::uint16_t port = kDefaultSecurePort;
  Mode mode = Mode::ClientServer;
  std::int64_t publish_interval_ms = 1000;
  std::filesystem::path cert_file;
  std::filesystem::path key_file;
  AuthMode auth = AuthMode::UserPass;
  /// ClientCert: directory of trusted client certificates (PEM).
  std::filesystem::path trust_dir;
  std::string user;
  std::string pass;
  /// How long to wait for the device structure; 0 waits indefinitely.
  std::int64_t startup_timeout_ms = 60000;
};

struct FolderNode {
  core::NodeId node;
  std::string browse_name;
  std::string browse_path;
  std::optional<core::NodeId> parent;
  std::vector<core::NodeId> children;
};

struct VariableNode {
  core::NodeDescriptor descriptor;
  core::StoreKey key;
  core::NodeId parent;
};

struct MirroredAddressSpace {
  core::NamespaceTable table;
  std::map<core::NodeId, VariableNode> variables;
  std::map<core::NodeId, FolderNode> folders;
  std::uint64_t generation = 0;
};

/// Folder id for a browse path, e.g. "folder:Objects/A/X".
core::NodeId folder_node_id(const core::NamespaceTable& table, const std::string& browse_path);

/// Rebuilds the table without the standard namespace and derives the folder
/// tree from the browse paths. Throws StructuralError when a node refers to
/// the standard namespace or to an empty slot.
MirroredAddressSpace build_address_space(const core::DeviceAlias& alias, const store::StructureSnapshot& snapshot);

/// Answers one already authenticated request. `received` is when the
/// request was taken off the wire; it feeds the reader-side latency probe.
snap::Json handle_request(const MirroredAddressSpace& space, const store::StoreReader& reader,
                          const snap::Request& request, std::chrono::steady_clock::time_point received,
                          store::LatencyProbe* probe = nullptr);

/// Current values of every mirrored variable that has one.
snap::Json build_notify(const MirroredAddressSpace& space, const store::StoreReader& reader);

class SecServer {
 public:
  enum class Status { Waiting, Serving, Failed, Stopped };

  struct Options {
    store::LatencyProbe* probe = nullptr;
    net::Millis handshake_timeout{5000};
  };

  /// Binds the port and loads TLS material; throws StartupError.
  SecServer(SecServerConfig config, store::StoreReader reader, Options options);
  SecServer(SecServerConfig config, store::StoreReader reader)
      : SecServer(std::move(config), std::move(reader), Options{}) {}
  ~SecServer() { stop(); }

  /// Waits for the structure in the background, then starts listening.
  void start();
  void stop();

  /// Blocks until Serving or Failed, or the timeout elapses.
  Status wait_ready(std::chrono::milliseconds timeout) const;
  Status status() const;
  std::string failure() const;

  std::uint16_t port() const noexcept { return server_.port(); }
  const SecServerConfig& config() const noexcept { return config_; }
  std::uint64_t reads_served() const noexcept { return reads_.load(); }
  std::uint64_t notifications_dropped() const noexcept { return dropped_.load(); }
  std::size_t subscriber_count() const;
  std::shared_ptr<const MirroredAddressSpace> address_space();

 private:
  struct Subscriber {
    net::EventFd wake;
    std::mutex mutex;
    std::deque<snap::Json> queue;
    std::chrono::milliseconds interval{1000};
    std::chrono::steady_clock::time_point next_due;
  };

  void startup(std::stop_token stop);
  void set_status(Status s, std::string reason = {});
  void serve(net::Socket socket, const net::EventFd& stop);
  void publish_loop(std::stop_token stop);
  std::shared_ptr<Subscriber> subscribe(std::chrono::milliseconds interval);
  void unsubscribe(const std::shared_ptr<Subscriber>& sub);

  SecServerConfig config_;
  store::StoreReader reader_;
  Options options_;
  net::TlsContext tls_;
  net::TcpServer server_;

  mutable std::mutex status_mutex_;
  mutable std::condition_variable status_cv_;
  Status status_ = Status::Waiting;
  std::string failure_;

  std::mutex space_mutex_;
  std::shared_ptr<const MirroredAddressSpace> space_;

  mutable std::mutex subs_mutex_;
  std::condition_variable_any subs_cv_;
  std::list<std::shared_ptr<Subscriber>> subscribers_;

  std::atomic<std::uint64_t> reads_{0};
  std::atomic<std::uint64_t> dropped_{0};
  std::jthread startup_thread_;
  std::jthread publish_thread_;
};

}  // namespace sigma::sec
