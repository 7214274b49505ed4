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
 * @file data_store.hpp
 * @brief Central buffer between the insecure and the secure side.
 *
 * Two synchronised maps: the static node structure per device and the
 * latest value per store key. The store is only reachable through two
 * handles. A StoreWriter (held by the insecure clients) can register
 * structure and publish values; a StoreReader (held by the secure servers)
 * can only look things up. Neither side ever sees the other.
 */

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stop_token>
#include <string>
#include <unordered_map>
#include <vector>

#include "sigma/core/model.hpp"

namespace sigma::store {

/// Point-in-time copy of one device's structure.
struct StructureSnapshot {
  core::NamespaceTable table;
  std::vector<core::NodeDescriptor> nodes;
  /// Bumped on every put_structure for the alias.
  std::uint64_t generation = 0;
};

class StoreWriter;
class StoreReader;

class DataStore : public std::enable_shared_from_this<DataStore> {
 public:
  struct Options {
    /// Directory receiving <alias>/namespace<N>.json; no mirror when empty.
    std::filesystem::path mirror_root;
  };

  static std::shared_ptr<DataStore> create(Options options = {});

  StoreWriter writer();
  StoreReader reader();

  const Options& options() const noexcept { return options_; }

 private:
  friend class StoreWriter;
  friend class StoreReader;

  explicit DataStore(Options options) : options_(std::move(options)) {}

  void put_value(const core::StoreKey& key, core::DataValue value);
  std::optional<core::DataValue> get_value(const core::StoreKey& key) const;

  void put_structure(const core::DeviceAlias& alias, core::NamespaceTable table,
                     std::vector<core::NodeDescriptor> nodes);
  std::optional<StructureSnapshot> snapshot_structure(const core::DeviceAlias& alias) const;
  std::optional<StructureSnapshot> wait_for_structure(const core::DeviceAlias& alias,
                                                      std::chrono::milliseconds timeout,
                                                      std::stop_token stop) const;
  std::uint64_t structure_generation(const core::DeviceAlias& alias) const;
  void mirror_write(const core::DeviceAlias& alias) const;

  Options options_;

  mutable std::shared_mutex values_mutex_;
  std::unordered_map<std::string, core::DataValue> values_;

  mutable std::mutex structure_mutex_;
  mutable std::condition_variable_any structure_cv_;
  std::map<std::string, StructureSnapshot> structures_;
  std::uint64_t next_generation_ = 1;
};

/// Insecure-side handle: registers structure and publishes values.
class StoreWriter {
 public:
  /// Replaces the entry for `key`. A timestamp older than the stored one is
  /// raised to it so per-key timestamps never go backwards.
  void put_value(const core::StoreKey& key, core::DataValue value) { store_->put_value(key, std::move(value)); }

  /// Registers (or replaces) a device's structure and rewrites its mirror
  /// files. Throws StructuralError on duplicate keys, paths outside
  /// "Objects/<alias>" or namespace indices missing from the table. Mirror
  /// write failures are logged; the store stays authoritative.
  void put_structure(const core::DeviceAlias& alias, core::NamespaceTable table,
                     std::vector<core::NodeDescriptor> nodes) {
    store_->put_structure(alias, std::move(table), std::move(nodes));
  }

  /// Rewrites the mirror files from the stored structure. Throws IoError.
  void mirror_write(const core::DeviceAlias& alias) const { store_->mirror_write(alias); }

 private:
  friend class DataStore;
  explicit StoreWriter(std::shared_ptr<DataStore> s) : store_(std::move(s)) {}
  std::shared_ptr<DataStore> store_;
};

/// Secure-side handle: lookups only.
class StoreReader {
 public:
  std::optional<core::DataValue> get_value(const core::StoreKey& key) const { return store_->get_value(key); }

  /// nullopt while the alias has no structure yet (not ready).
  std::optional<StructureSnapshot> snapshot_structure(const core::DeviceAlias& alias) const {
    return store_->snapshot_structure(alias);
  }

  /// Blocks until the alias has structure, the timeout elapses or `stop` fires.
  std::optional<StructureSnapshot> wait_for_structure(const core::DeviceAlias& alias,
                                                      std::chrono::milliseconds timeout,
                                                      std::stop_token stop = {}) const {
    return store_->wait_for_structure(alias, timeout, std::move(stop));
  }

  /// 0 while not ready.
  std::uint64_t structure_generation(const core::DeviceAlias& alias) const {
    return store_->structure_generation(alias);
  }

 private:
  friend class DataStore;
  explicit StoreReader(std::shared_ptr<const DataStore> s) : store_(std::move(s)) {}
  std::shared_ptr<const DataStore> store_;
};

}  // namespace sigma::store
