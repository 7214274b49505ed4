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

#include <filesystem>
#include <vector>

#include "sigma/core/model.hpp"

namespace sigma::store {

/// Parsed content of one device's mirror directory.
struct MirroredStructure {
  core::NamespaceTable table;
  std::vector<core::NodeDescriptor> nodes;

  bool operator==(const MirroredStructure&) const = default;
};

/// Malformed or unreadable mirror file.
class MirrorParseError : public Error {
 public:
  MirrorParseError(std::filesystem::path file, std::size_t byte_offset, const std::string& reason);

  const std::filesystem::path& file() const noexcept { return file_; }
  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::filesystem::path file_;
  std::size_t offset_;
};

/// <root>/<alias>/namespace<N>.json
std::filesystem::path namespace_file(const std::filesystem::path& root, const core::DeviceAlias& alias,
                                     std::uint16_t ns);
/// <root>/<alias>/namespaces.json, holding the complete namespace array.
std::filesystem::path namespace_index_file(const std::filesystem::path& root, const core::DeviceAlias& alias);

/// Writes one namespace<N>.json per namespace index referenced by `nodes`
/// plus the namespace array index file, and removes namespace files that no
/// longer have nodes. Files are replaced atomically (write + rename).
/// Throws IoError on filesystem failure.
void mirror_write(const std::filesystem::path& root, const core::DeviceAlias& alias,
                  const core::NamespaceTable& table, const std::vector<core::NodeDescriptor>& nodes);

/// Rebuilds the structure written by mirror_write. Nodes come back in
/// canonical (ns, id) order. Throws MirrorParseError naming file and offset.
MirroredStructure mirror_load(const std::filesystem::path& root, const core::DeviceAlias& alias);

/// Canonical node order used by the store and the mirror files.
void sort_canonical(std::vector<core::NodeDescriptor>& nodes);

}  // namespace sigma::store
