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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "sigma/core/model.hpp"
#include "sigma/net/server.hpp"
#include "sigma/sim/generator.hpp"
#include "sigma/snap/messages.hpp"

namespace sigma::sim {

inline constexpr std::uint16_t kDefaultLegacyPort = 14840;

/// Node tree of a simulated legacy controller.
///
/// JSON form (node fields follow the mirror file schema):
///   {"tickMs":50,
///    "namespaceArray":["http://opcfoundation.org/UA/","urn:sim:plc21"],
///    "nodes":[{"ns":1,"id":1001,"browsePath":"Machine/Temp","displayName":"Temp",
///              "description":"","dataType":"Double","generator":{...}}]}
/// browsePath is relative to the Objects folder. Intermediate folders are
/// created automatically unless listed under "folders" with explicit ids.
struct LegacyFixture {
  struct Variable {
    core::NodeId node;
    std::string browse_path;
    std::string display_name;
    std::string description;
    /// Kept verbatim so fixtures can declare types the bridge must reject.
    std::string data_type;
    Generator generator;
    /// Served for String nodes.
    std::string text;
    /// Test hook: browse reports no parent.
    bool orphan = false;
  };
  struct Folder {
    core::NodeId node;
    std::string browse_path;
    std::string display_name;
    std::string description;
  };

  std::int64_t tick_ms = 50;
  std::vector<std::string> namespace_array;
  std::vector<Folder> folders;
  std::vector<Variable> variables;

  static LegacyFixture from_json(const nlohmann::json& j);
  static LegacyFixture load(const std::filesystem::path& file);

  /// Injection-moulding PLC: Machine/Temp (2,1001,Double), Machine/Speed
  /// (2,1002,Int32), Machine/Running (2,1003,Boolean), Info/Name (2,"name",String).
  static LegacyFixture plc();
  /// Single random_per_read Double variable (ns=1, id=1) for latency runs.
  static LegacyFixture test_server();
};

class LegacyNodeSim {
 public:
  /// Called after each variable read response is handed to the transport.
  using ReadObserver = std::function<void(const core::NodeId&, const core::DataValue&,
                                          std::chrono::steady_clock::time_point sent)>;

  LegacyNodeSim(LegacyFixture fixture, std::uint64_t seed);
  ~LegacyNodeSim() { stop(); }

  /// Throws StartupError when the port is taken.
  void start(std::uint16_t port, const std::string& host = "127.0.0.1");
  void stop();
  std::uint16_t port() const noexcept { return port_; }

  void set_read_observer(ReadObserver observer);
  /// Pins a variable to a value until cleared.
  void set_value(const core::NodeId& node, core::DataVariant value);
  void clear_values();

  /// Value served for `node` right now; nullopt for unknown or folder nodes.
  std::optional<core::DataValue> current(const core::NodeId& node);
  /// Value at a tick for a time-driven generator (determinism checks).
  std::optional<core::DataVariant> value_at(const core::NodeId& node, std::int64_t tick) const;

  /// Answer to one request body (used by the server and by tests).
  snap::Json respond(const snap::Json& request);
  std::uint64_t reads_served() const noexcept { return reads_.load(); }

 private:
  struct Entry {
    bool is_folder = false;
    std::size_t index = 0;  // into folders or variables
    std::optional<core::NodeId> parent;
    std::vector<core::NodeId> children;
    std::string browse_name;
  };

  void build_tree();
  std::int64_t current_tick() const;
  core::DataVariant shape(const LegacyFixture::Variable& v, double raw) const;
  void serve(net::Socket socket, const net::EventFd& stop);

  LegacyFixture fixture_;
  std::uint64_t seed_;
  std::map<core::NodeId, Entry> tree_;
  std::map<core::NodeId, std::uint64_t> salts_;
  std::chrono::steady_clock::time_point epoch_;

  std::mutex mutex_;
  std::map<core::NodeId, core::DataVariant> pinned_;
  std::map<core::NodeId, std::uint64_t> draws_;
  ReadObserver observer_;

  std::unique_ptr<net::TcpServer> server_;
  std::uint16_t port_ = 0;
  std::atomic<std::uint64_t> reads_{0};
};

/// NodeId of the Objects root folder.
core::NodeId objects_folder_id();

}  // namespace sigma::sim
