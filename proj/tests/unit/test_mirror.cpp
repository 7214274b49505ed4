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

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sigma/store/data_store.hpp"
#include "sigma/store/mirror.hpp"
#include "test_support.hpp"

using namespace sigma;
using namespace sigma::core;
using sigma::store::DataStore;

namespace {

// Three namespaces, twelve nodes, mixed identifier and value kinds.
std::pair<NamespaceTable, std::vector<NodeDescriptor>> fixture(const std::string& alias) {
  NamespaceTable table{{"http://opcfoundation.org/UA/", "urn:sim:plc21", "urn:sim:plc21:machine", "urn:vendor:x"}};
  std::vector<NodeDescriptor> nodes;
  const DataKind kinds[] = {DataKind::Double, DataKind::Int32, DataKind::Boolean, DataKind::String,
                            DataKind::Int16,  DataKind::Int64, DataKind::Float,   DataKind::DateTime};
  for (int i = 0; i < 12; ++i) {
    NodeDescriptor d;
    const auto ns = static_cast<std::uint16_t>(1 + i % 3);
    d.node_id = (i % 4 == 3) ? NodeId(ns, "var_" + std::to_string(i)) : NodeId(ns, static_cast<std::uint32_t>(1000 + i));
    d.browse_name = "Var" + std::to_string(i);
    d.display_name = "Variable " + std::to_string(i);
    d.description = i % 2 ? "" : "unicode °C & \"quotes\"";
    d.data_kind = kinds[i % 8];
    d.browse_path = "Objects/" + alias + "/Group" + std::to_string(i % 2) + "/" + d.browse_name;
    if (d.data_kind == DataKind::DateTime) d.time_source = DateTimeSource::UnixSeconds;
    nodes.push_back(d);
  }
  return {table, nodes};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("mirror round-trip through the store reproduces the structure") {
  testing::TempDir dir("mirror");
  const auto root = dir.path() / "config";
  auto store = DataStore::create({root});
  const DeviceAlias alias("PLC21");
  auto [table, nodes] = fixture(alias.str());
  store->writer().put_structure(alias, table, nodes);
  store->writer().mirror_write(alias);

  const auto loaded = store::mirror_load(root, alias);
  store::sort_canonical(nodes);
  CHECK(loaded.table == table);
  REQUIRE(loaded.nodes.size() == nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    CAPTURE(i);
    CHECK(loaded.nodes[i] == nodes[i]);
  }
}

TEST_CASE("mirror files follow config/<alias>/namespace<N>.json exactly") {
  testing::TempDir dir("mirror");
  const auto root = dir.path() / "config";
  const DeviceAlias alias("PLC21");
  auto [table, nodes] = fixture(alias.str());
  store::mirror_write(root, alias, table, nodes);

  std::set<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(root / "PLC21")) names.insert(e.path().filename().string());
  CHECK(names == std::set<std::string>{"namespace1.json", "namespace2.json", "namespace3.json", "namespaces.json"});
  CHECK(store::namespace_file(root, alias, 2) == root / "PLC21" / "namespace2.json");

  const auto text = slurp(root / "PLC21" / "namespace2.json");
  CHECK(text.back() == '\n');
  const auto doc = nlohmann::ordered_json::parse(text);
  CHECK(doc.begin().key() == "namespaceUri");
  CHECK(doc["namespaceUri"] == "urn:sim:plc21:machine");
  const auto& first = doc["nodes"][0];
  std::vector<std::string> keys;
  for (auto it = first.begin(); it != first.end(); ++it) keys.push_back(it.key());
  const std::vector<std::string> expected{"ns", "id", "browseName", "browsePath", "displayName", "description", "dataType"};
  CHECK(std::vector<std::string>(keys.begin(), keys.begin() + 7) == expected);
}

TEST_CASE("namespaces {2,4} produce exactly namespace2 and namespace4") {
  testing::TempDir dir("mirror");
  const DeviceAlias alias("PLC21");
  NamespaceTable table{{"http://opcfoundation.org/UA/", "urn:a", "urn:b", "urn:c", "urn:d"}};
  NodeDescriptor a;
  a.node_id = NodeId(2, 1);
  a.browse_name = "A";
  a.browse_path = "Objects/PLC21/A";
  NodeDescriptor b = a;
  b.node_id = NodeId(4, 1);
  b.browse_path = "Objects/PLC21/B";
  store::mirror_write(dir.path(), alias, table, {a, b});
  CHECK(std::filesystem::exists(dir.path() / "PLC21" / "namespace2.json"));
  CHECK(std::filesystem::exists(dir.path() / "PLC21" / "namespace4.json"));
  CHECK_FALSE(std::filesystem::exists(dir.path() / "PLC21" / "namespace1.json"));
  CHECK_FALSE(std::filesystem::exists(dir.path() / "PLC21" / "namespace3.json"));

  // A later structure without namespace 4 removes its stale file.
  store::mirror_write(dir.path(), alias, table, {a});
  CHECK_FALSE(std::filesystem::exists(dir.path() / "PLC21" / "namespace4.json"));
}

TEST_CASE("alias with zero nodes gets a directory and no namespace files") {
  testing::TempDir dir("mirror");
  const DeviceAlias alias("Empty");
  store::mirror_write(dir.path(), alias, NamespaceTable{{"http://opcfoundation.org/UA/"}}, {});
  REQUIRE(std::filesystem::is_directory(dir.path() / "Empty"));
  for (const auto& e : std::filesystem::directory_iterator(dir.path() / "Empty")) {
    CHECK(e.path().filename() == "namespaces.json");
  }
  const auto loaded = store::mirror_load(dir.path(), alias);
  CHECK(loaded.nodes.empty());
  CHECK(loaded.table.size() == 1);
}

TEST_CASE("malformed mirror file names the file and byte offset") {
  testing::TempDir dir("mirror");
  const DeviceAlias alias("Bad");
  auto [table, nodes] = fixture("Bad");
  store::mirror_write(dir.path(), alias, table, nodes);
  const auto victim = dir.path() / "Bad" / "namespace1.json";
  std::ofstream(victim) << "{\"namespaceUri\": \"urn:sim:plc21\", \"nodes\": [ {\"ns\": 1,, } ]}";
  try {
    store::mirror_load(dir.path(), alias);
    FAIL("expected a parse error");
  } catch (const store::MirrorParseError& e) {
    CHECK(e.file() == victim);
    CHECK(e.byte_offset() > 40);
    CHECK(std::string(e.what()).find("namespace1.json") != std::string::npos);
  }
}

TEST_CASE("mirror round-trip property over random structures") {
  auto g = testing::rng(11);
  for (int round = 0; round < 40; ++round) {
    testing::TempDir dir("mirror-prop");
    const DeviceAlias alias("D" + std::to_string(round));
    NamespaceTable table{{"http://opcfoundation.org/UA/"}};
    const int ns_count = 1 + static_cast<int>(g() % 4);
    for (int i = 0; i < ns_count; ++i) table.uris.push_back("urn:r" + std::to_string(round) + ":" + std::to_string(i));
    std::vector<NodeDescriptor> nodes;
    std::set<NodeId> used;
    const int n = static_cast<int>(g() % 30);
    for (int i = 0; i < n; ++i) {
      NodeDescriptor d;
      const auto ns = static_cast<std::uint16_t>(1 + g() % ns_count);
      d.node_id = g() % 2 ? NodeId(ns, static_cast<std::uint32_t>(g() % 100000)) : NodeId(ns, "s" + std::to_string(g() % 1000));
      if (!used.insert(d.node_id).second) continue;
      d.browse_name = "n" + std::to_string(i);
      d.display_name = "N " + std::to_string(g() % 7);
      d.description = std::string(g() % 5, 'x');
      d.data_kind = static_cast<DataKind>(g() % 8);
      d.browse_path = "Objects/" + alias.str() + "/f" + std::to_string(g() % 3) + "/" + d.browse_name;
      nodes.push_back(d);
    }
    store::mirror_write(dir.path(), alias, table, nodes);
    const auto loaded = store::mirror_load(dir.path(), alias);
    store::sort_canonical(nodes);
    CHECK(loaded.table == table);
    CHECK(loaded.nodes == nodes);
  }
}
