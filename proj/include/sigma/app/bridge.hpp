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
#include <vector>

#include "sigma/app/config.hpp"
#include "sigma/insec/insec_client.hpp"
#include "sigma/sec/sec_server.hpp"
#include "sigma/store/data_store.hpp"
#include "sigma/store/latency_probe.hpp"

namespace sigma::app {

/// The assembled system: one store, one polling worker per device and one
/// secure endpoint per configured alias. Workers only receive the writer
/// handle and servers only the reader handle.
class Bridge {
 public:
  /// Binds every secure port and loads TLS material; throws StartupError.
  explicit Bridge(Configs configs);
  ~Bridge() { stop(); }

  void start();
  /// Stops servers first, then workers, then rewrites the mirror files.
  void stop();

  /// true once every server is serving; false on failure or timeout.
  bool wait_serving(std::chrono::milliseconds timeout) const;
  /// First failure reported by a server, empty when none.
  std::string failure() const;

  const Configs& configs() const noexcept { return configs_; }
  std::shared_ptr<store::DataStore> store() const noexcept { return store_; }
  /// Present when instrumentation is enabled in the server configuration.
  store::LatencyProbe* probe() noexcept { return probe_.get(); }
  std::vector<std::unique_ptr<insec::InsecClient>>& clients() noexcept { return clients_; }
  std::vector<std::unique_ptr<sec::SecServer>>& servers() noexcept { return servers_; }

 private:
  Configs configs_;
  std::shared_ptr<store::DataStore> store_;
  std::unique_ptr<store::LatencyProbe> probe_;
  std::vector<std::unique_ptr<insec::InsecClient>> clients_;
  std::vector<std::unique_ptr<sec::SecServer>> servers_;
  bool started_ = false;
};

}  // namespace sigma::app
