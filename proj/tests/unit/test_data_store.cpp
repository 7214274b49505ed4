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

#include <atomic>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sigma/store/data_store.hpp"
#include "sigma/store/latency_probe.hpp"
#include "sigma/store/mirror.hpp"
#include "test_support.hpp"

using namespace sigma;
using namespace sigma::core;
using sigma::store::DataStore;
using sigma::store::StoreReader;
using sigma::store::StoreWriter;

namespace {

// Reader handles must not offer any mutation.
template <typename R>
concept CanPutValue = requires(R r, const StoreKey& k, DataValue v) { r.put_value(k, v); };
template <typename R>
concept CanPutStructure = requires(R r, const DeviceAlias& a, NamespaceTable t, std::vector<NodeDescriptor> n) {
  r.put_structure(a, t, n);
};
static_assert(!CanPutValue<StoreReader>);
static_assert(!CanPutStructure<StoreReader>);
static_assert(CanPutValue<StoreWriter>);
static_assert(CanPutStructure<StoreWriter>);

NodeDescriptor variable(const std::string& alias, NodeId id, const std::string& path, DataKind kind) {
  NodeDescriptor d;
  d.node_id = std::move(id);
  d.browse_name = path.substr(path.rfind('/') + 1);
  d.display_name = d.browse_name;
  d.description = "desc of " + d.browse_name;
  d.data_kind = kind;
  d.browse_path = "Objects/" + alias + "/" + path;
  return d;
}

std::uint64_t sim_hash(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  return x;
}

// Self-validating payload: "<n>|<hash(n)>".
std::string payload(std::uint64_t n) { return std::to_string(n) + "|" + std::to_string(sim_hash(n)); }

}  // namespace

TEST_CASE("put then get returns the value; last write wins") {
  auto store = DataStore::create();
  auto w = store->writer();
  auto r = store->reader();
  const auto key = make_store_key(DeviceAlias("Cooler"), NodeId(2, "temp"));
  CHECK_FALSE(r.get_value(key).has_value());
  w.put_value(key, {23.5, 100});
  CHECK(r.get_value(key) == DataValue{23.5, 100});
  w.put_value(key, {24.0, 200});
  CHECK(r.get_value(key) == DataValue{24.0, 200});
}

TEST_CASE("timestamps never go backwards per key") {
  auto store = DataStore::create();
  auto w = store->writer();
  const auto key = make_store_key(DeviceAlias("A"), NodeId(1, 1));
  w.put_value(key, {1.0, 500});
  w.put_value(key, {2.0, 400});
  const auto v = store->reader().get_value(key);
  REQUIRE(v);
  CHECK(v->variant == DataVariant{2.0});
  CHECK(v->source_timestamp_ns == 500);
}

TEST_CASE("sequence of puts: reader sees the last one") {
  auto store = DataStore::create();
  auto w = store->writer();
  const auto key = make_store_key(DeviceAlias("A"), NodeId(1, 9));
  for (std::int64_t i = 1; i <= 1000; ++i) w.put_value(key, {DataVariant{i}, i});
  CHECK(store->reader().get_value(key) == DataValue{DataVariant{std::int64_t{1000}}, 1000});
}

TEST_CASE("no torn reads under concurrent writers and readers") {
  auto store = DataStore::create();
  constexpr int kWriters = 8;
  constexpr int kReaders = 8;
  constexpr std::uint64_t kOpsPerThread = 1'000'000 / (kWriters + kReaders);
  std::vector<StoreKey> keys;
  for (int i = 0; i < kWriters; ++i) keys.push_back(make_store_key(DeviceAlias("D"), NodeId(1, i)));
  // One shared key hammered by every writer.
  const auto shared = make_store_key(DeviceAlias("D"), NodeId(1, "shared"));

  std::atomic<std::uint64_t> violations{0};
  std::atomic<std::uint64_t> observed{0};
  std::vector<std::jthread> threads;
  for (int t = 0; t < kWriters; ++t) {
    threads.emplace_back([&, t] {
      auto w = store->writer();
      for (std::uint64_t n = 1; n <= kOpsPerThread; ++n) {
        const std::uint64_t tagged = (static_cast<std::uint64_t>(t) << 40) | n;
        const auto& key = (n % 2) ? keys[t] : shared;
        w.put_value(key, {payload(tagged), static_cast<std::int64_t>(n)});
      }
    });
  }
  for (int t = 0; t < kReaders; ++t) {
    threads.emplace_back([&, t] {
      auto r = store->reader();
      for (std::uint64_t n = 0; n < kOpsPerThread; ++n) {
        const int k = static_cast<int>(n % kWriters);
        const auto v = r.get_value((n + t) % 3 == 0 ? shared : keys[k]);
        if (!v) continue;
        observed.fetch_add(1, std::memory_order_relaxed);
        const auto* s = std::get_if<std::string>(&v->variant);
        if (!s) {
          violations++;
          continue;
        }
        const auto bar = s->find('|');
        const std::uint64_t tagged = std::stoull(s->substr(0, bar));
        if (s->substr(bar + 1) != std::to_string(sim_hash(tagged))) violations++;
      }
    });
  }
  threads.clear();
  CHECK(violations.load() == 0);
  CHECK(observed.load() > 0);
}

TEST_CASE("per-key timestamps stay monotonic across interleaved writers") {
  auto store = DataStore::create();
  const auto key = make_store_key(DeviceAlias("M"), NodeId(1, 1));
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> regressions{0};
  std::jthread reader([&] {
    auto r = store->reader();
    std::int64_t last = 0;
    while (!stop) {
      if (const auto v = r.get_value(key)) {
        if (v->source_timestamp_ns < last) regressions++;
        last = v->source_timestamp_ns;
      }
    }
  });
  std::vector<std::jthread> writers;
  for (int t = 0; t < 4; ++t) {
    writers.emplace_back([&] {
      auto w = store->writer();
      for (int i = 0; i < 50000; ++i) {
        const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
        w.put_value(key, {DataVariant{i}, static_cast<std::int64_t>(now)});
      }
    });
  }
  writers.clear();
  stop = true;
  reader.join();
  CHECK(regressions.load() == 0);
}

TEST_CASE("structure snapshots are point-in-time copies") {
  auto store = DataStore::create();
  auto w = store->writer();
  auto r = store->reader();
  const DeviceAlias alias("PLC21");
  CHECK_FALSE(r.snapshot_structure(alias).has_value());
  CHECK(r.structure_generation(alias) == 0);

  const NamespaceTable table{{"http://opcfoundation.org/UA/", "urn:sim:plc21"}};
  w.put_structure(alias, table, {variable("PLC21", NodeId(1, 1001), "Machine/Temp", DataKind::Double)});
  const auto first = r.snapshot_structure(alias);
  REQUIRE(first);
  CHECK(first->nodes.size() == 1);
  const auto gen = r.structure_generation(alias);
  CHECK(gen > 0);

  w.put_structure(alias, table,
                  {variable("PLC21", NodeId(1, 1001), "Machine/Temp", DataKind::Double),
                   variable("PLC21", NodeId(1, 1002), "Machine/Speed", DataKind::Int32)});
  CHECK(first->nodes.size() == 1);
  CHECK(r.snapshot_structure(alias)->nodes.size() == 2);
  CHECK(r.structure_generation(alias) > gen);
}

TEST_CASE("put_structure rejects inconsistent structures") {
  auto store = DataStore::create();
  auto w = store->writer();
  const DeviceAlias alias("A");
  const NamespaceTable table{{"http://opcfoundation.org/UA/", "urn:a"}};
  SUBCASE("duplicate key") {
    CHECK_THROWS_AS(w.put_structure(alias, table,
                                    {variable("A", NodeId(1, 5), "X/One", DataKind::Double),
                                     variable("A", NodeId(1, 5), "X/Two", DataKind::Double)}),
                    StructuralError);
  }
  SUBCASE("path of another alias") {
    CHECK_THROWS_AS(w.put_structure(alias, table, {variable("B", NodeId(1, 5), "X", DataKind::Double)}),
                    StructuralError);
  }
  SUBCASE("namespace index outside the table") {
    CHECK_THROWS_AS(w.put_structure(alias, table, {variable("A", NodeId(4, 5), "X", DataKind::Double)}),
                    StructuralError);
  }
}

TEST_CASE("wait_for_structure wakes on put_structure") {
  auto store = DataStore::create();
  const DeviceAlias alias("Late");
  std::jthread later([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    store->writer().put_structure(alias, NamespaceTable{{"u0", "urn:late"}},
                                  {variable("Late", NodeId(1, 1), "V", DataKind::Double)});
  });
  const auto snap = store->reader().wait_for_structure(alias, std::chrono::seconds(5));
  REQUIRE(snap);
  CHECK(snap->nodes.size() == 1);
  CHECK_FALSE(store->reader().wait_for_structure(DeviceAlias("Never"), std::chrono::milliseconds(20)).has_value());
}

TEST_CASE("latency probe pairs the first read of each version") {
  store::LatencyProbe probe;
  probe.record_write("A:1:1", 10, 1500);
  probe.record_read("A:1:1", 10, 700);
  probe.record_read("A:1:1", 10, 900);  // second read of the same version
  probe.record_read("A:1:1", 9, 100);   // stale version
  probe.record_write("A:1:1", 11, 1000);
  probe.record_read("A:1:1", 11, 250);
  const auto samples = probe.samples();
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].dt1_ns == 1500);
  CHECK(samples[0].dt2_ns == 700);
  CHECK(samples[0].t_proc_ns == 2200);
  CHECK(samples[1].t_proc_ns == 1250);
  for (const auto& s : samples) CHECK(s.t_proc_ns == s.dt1_ns + s.dt2_ns);
  probe.clear();
  CHECK(probe.sample_count() == 0);
}
