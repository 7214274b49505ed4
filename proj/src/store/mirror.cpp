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

#include "sigma/store/mirror.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sigma::store {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const std::regex kNamespaceFileName(R"(namespace(0|[1-9][0-9]*)\.json)");

void write_atomically(const fs::path& target, const std::string& text) {
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

ojson node_to_json(const core::NodeDescriptor& d) {
  ojson n;
  n["ns"] = d.node_id.ns();
  if (d.node_id.is_numeric()) {
    n["id"] = d.node_id.numeric();
  } else {
    n["id"] = d.node_id.text();
  }
  n["browseName"] = d.browse_name;
  n["browsePath"] = d.browse_path;
  n["displayName"] = d.display_name;
  n["description"] = d.description;
  n["dataType"] = core::kind_name(d.data_kind);
  if (d.time_source != core::DateTimeSource::EpochNanos) {
    n["timeSource"] = core::time_source_name(d.time_source);
  }
  return n;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw MirrorParseError(file, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ojson parse_file(const fs::path& file) {
  const std::string text = read_file(file);
  try {
    auto j = ojson::parse(text);
    if (!j.is_object()) throw MirrorParseError(file, 0, "top level is not an object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw MirrorParseError(file, e.byte, e.what());
  }
}

template <typename T>
T field(const ojson& obj, const char* name, const fs::path& file) {
  auto it = obj.find(name);
  if (it == obj.end()) throw MirrorParseError(file, 0, std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw MirrorParseError(file, 0, std::string("field '") + name + "': " + e.what());
  }
}

core::NodeDescriptor node_from_json(const ojson& n, std::uint16_t expected_ns, const fs::path& file) {
  if (!n.is_object()) throw MirrorParseError(file, 0, "node entry is not an object");
  const auto ns = field<std::uint16_t>(n, "ns", file);
  if (ns != expected_ns) {
    throw MirrorParseError(file, 0, "node namespace " + std::to_string(ns) + " in file for namespace " +
                                        std::to_string(expected_ns));
  }
  core::NodeDescriptor d;
  const auto& id = n.at("id");
  try {
    if (id.is_number_unsigned()) {
      d.node_id = core::NodeId(ns, id.get<std::uint32_t>());
    } else if (id.is_string()) {
      d.node_id = core::NodeId(ns, id.get<std::string>());
    } else {
      throw MirrorParseError(file, 0, "node id must be an unsigned integer or a string");
    }
  } catch (const ConfigError& e) {
    throw MirrorParseError(file, 0, e.what());
  }
  d.browse_name = field<std::string>(n, "browseName", file);
  d.browse_path = field<std::string>(n, "browsePath", file);
  d.display_name = field<std::string>(n, "displayName", file);
  d.description = field<std::string>(n, "description", file);
  const auto kind = core::parse_kind(field<std::string>(n, "dataType", file));
  if (!kind) throw MirrorParseError(file, 0, "unknown dataType");
  d.data_kind = *kind;
  if (n.contains("timeSource")) {
    const auto src = core::parse_time_source(field<std::string>(n, "timeSource", file));
    if (!src) throw MirrorParseError(file, 0, "unknown timeSource");
    d.time_source = *src;
  }
  return d;
}

}  // namespace

MirrorParseError::MirrorParseError(fs::path file, std::size_t byte_offset, const std::string& reason)
    : Error("mirror file '" + file.string() + "' at byte " + std::to_string(byte_offset) + ": " + reason),
      file_(std::move(file)),
      offset_(byte_offset) {}

fs::path namespace_file(const fs::path& root, const core::DeviceAlias& alias, std::uint16_t ns) {
  return root / alias.str() / ("namespace" + std::to_string(ns) + ".json");
}

fs::path namespace_index_file(const fs::path& root, const core::DeviceAlias& alias) {
  return root / alias.str() / "namespaces.json";
}

void sort_canonical(std::vector<core::NodeDescriptor>& nodes) {
  std::stable_sort(nodes.begin(), nodes.end(),
                   [](const auto& a, const auto& b) { return a.node_id < b.node_id; });
}

void mirror_write(const fs::path& root, const core::DeviceAlias& alias, const core::NamespaceTable& table,
                  const std::vector<core::NodeDescriptor>& nodes) {
  const fs::path dir = root / alias.str();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  std::map<std::uint16_t, std::vector<const core::NodeDescriptor*>> by_ns;
  std::vector<core::NodeDescriptor> sorted = nodes;
  sort_canonical(sorted);
  for (const auto& d : sorted) by_ns[d.node_id.ns()].push_back(&d);

  for (const auto& [ns, members] : by_ns) {
    ojson doc;
    doc["namespaceUri"] = table.contains_index(ns) ? table.uris[ns] : std::string{};
    doc["nodes"] = ojson::array();
    for (const auto* d : members) doc["nodes"].push_back(node_to_json(*d));
    write_atomically(namespace_file(root, alias, ns), doc.dump(2) + "\n");
  }

  ojson index;
  index["alias"] = alias.str();
  index["namespaceArray"] = table.uris;
  write_atomically(namespace_index_file(root, alias), index.dump(2) + "\n");

  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, kNamespaceFileName)) continue;
    const auto ns = std::stoul(m[1].str());
    if (ns > 0xFFFF || !by_ns.contains(static_cast<std::uint16_t>(ns))) fs::remove(entry.path(), ec);
  }
}

MirroredStructure mirror_load(const fs::path& root, const core::DeviceAlias& alias) {
  MirroredStructure out;
  const fs::path index_path = namespace_index_file(root, alias);
  const ojson index = parse_file(index_path);
  out.table.uris = field<std::vector<std::string>>(index, "namespaceArray", index_path);

  std::vector<std::pair<std::uint16_t, fs::path>> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root / alias.str(), ec)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, kNamespaceFileName)) continue;
    const auto ns = std::stoul(m[1].str());
    if (ns > 0xFFFF) throw MirrorParseError(entry.path(), 0, "namespace index out of range");
    files.emplace_back(static_cast<std::uint16_t>(ns), entry.path());
  }
  if (ec) throw MirrorParseError(root / alias.str(), 0, "cannot list directory: " + ec.message());
  std::sort(files.begin(), files.end());

  for (const auto& [ns, path] : files) {
    const ojson doc = parse_file(path);
    const auto uri = field<std::string>(doc, "namespaceUri", path);
    if (!out.table.contains_index(ns) || out.table.uris[ns] != uri) {
      throw MirrorParseError(path, 0, "namespaceUri does not match the namespace array");
    }
    const auto it = doc.find("nodes");
    if (it == doc.end() || !it->is_array()) throw MirrorParseError(path, 0, "missing node list");
    for (const auto& n : *it) out.nodes.push_back(node_from_json(n, ns, path));
  }
  sort_canonical(out.nodes);
  return out;
}

}  // namespace sigma::store
