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

#include "sigma/store/data_store.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "sigma/store/mirror.hpp"

namespace sigma::store {

std::shared_ptr<DataStore> DataStore::create(Options options) {
  return std::shared_ptr<DataStore>(new DataStore(std::move(options)));
}

StoreWriter DataStore::writer() { return StoreWriter(shared_from_this()); }

StoreReader DataStore::reader() { return StoreReader(shared_from_this()); }

void DataStore::put_value(const core::StoreKey& key, core::DataValue value) {
  std::unique_lock lock(values_mutex_);
  auto [it, inserted] = values_.try_emplace(key.str(), value);
  if (!inserted) {
    value.source_timestamp_ns = std::max(value.source_timestamp_ns, it->second.source_timestamp_ns);
    it->second = std::move(value);
  }
}

std::optional<core::DataValue> DataStore::get_value(const core::StoreKey& key) const {
  std::shared_lock lock(values_mutex_);
  auto it = values_.find(key.str());
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void DataStore::put_structure(const core::DeviceAlias& alias, core::NamespaceTable table,
                              std::vector<core::NodeDescriptor> nodes) {
  const std::string root = "Objects/" + alias.str();
  std::set<std::string> keys;
  for (const auto& d : nodes) {
    if (d.browse_path != root && !d.browse_path.starts_with(root + "/")) {
      throw StructuralError("browse path '" + d.browse_path + "' is not below '" + root + "'");
    }
    if (!table.contains_index(d.node_id.ns())) {
      throw StructuralError("node " + d.node_id.to_string() + " of '" + alias.str() +
                            "' references a namespace missing from its table");
    }
    if (!keys.insert(core::make_store_key(alias, d.node_id).str()).second) {
      throw StructuralError("duplicate store key " + core::make_store_key(alias, d.node_id).str());
    }
  }
  sort_canonical(nodes);

  {
    std::lock_guard lock(structure_mutex_);
    auto& slot = structures_[alias.str()];
    slot.table = std::move(table);
    slot.nodes = std::move(nodes);
    slot.generation = next_generation_++;
  }
  structure_cv_.notify_all();

  if (!options_.mirror_root.empty()) {
    try {
      mirror_write(alias);
    } catch (const Error& e) {
      spdlog::warn("mirror write for '{}' failed: {}", alias.str(), e.what());
    }
  }
}

std::optional<StructureSnapshot> DataStore::snapshot_structure(const core::DeviceAlias& alias) const {
  std::lock_guard lock(structure_mutex_);
  auto it = structures_.find(alias.str());
  if (it == structures_.end()) return std::nullopt;
  return it->second;
}

std::optional<StructureSnapshot> DataStore::wait_for_structure(const core::DeviceAlias& alias,
                                                               std::chrono::milliseconds timeout,
                                                               std::stop_token stop) const {
  std::unique_lock lock(structure_mutex_);
  const bool ready = structure_cv_.wait_for(lock, stop, timeout,
                                            [&] { return structures_.contains(alias.str()); });
  if (!ready) return std::nullopt;
  return structures_.at(alias.str());
}

std::uint64_t DataStore::structure_generation(const core::DeviceAlias& alias) const {
  std::lock_guard lock(structure_mutex_);
  auto it = structures_.find(alias.str());
  return it == structures_.end() ? 0 : it->second.generation;
}

void DataStore::mirror_write(const core::DeviceAlias& alias) const {
  if (options_.mirror_root.empty()) return;
  auto snap = snapshot_structure(alias);
  if (!snap) throw StructuralError("no structure stored for '" + alias.str() + "'");
  store::mirror_write(options_.mirror_root, alias, snap->table, snap->nodes);
}

}  // namespace sigma::store
