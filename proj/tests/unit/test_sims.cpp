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

#include "sigma/sim/generator.hpp"
#include "sigma/sim/legacy_sim.hpp"
#include "sigma/sim/modbus_sim.hpp"
#include "sigma/snap/channel.hpp"
#include "test_support.hpp"

using namespace sigma;
using namespace sigma::sim;
using sigma::testing::hex;
using sigma::testing::unhex;

namespace {

snap::Json call(LegacyNodeSim& sim, const std::string& text) { return sim.respond(snap::Json::parse(text)); }

ModbusFixture random_fixture() {
  return ModbusFixture::from_json(nlohmann::json::parse(R"({
    "tickMs": 10,
    "registers": [{"address": 0, "scale": "0.1", "generator": {"kind": "random", "min": 0, "max": 100}},
                  {"address": 1, "scale": "1", "generator": {"kind": "random", "min": 0, "max": 5000}}]})"));
}

}  // namespace

TEST_CASE("splitmix finaliser matches the published first output") {
  // splitmix64 seeded with 0 yields 0xE220A8397B1DCDAF first.
  CHECK(mix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(unit_interval(0) == 0.0);
  CHECK(unit_interval(~0ULL) < 1.0);
}

TEST_CASE("generators") {
  CHECK(Generator::constant(4.5).at_tick(1, 2, 3, 50) == 4.5);
  const auto sine = Generator::from_json({{"kind", "sine"}, {"min", 20}, {"max", 30}, {"periodMs", 1000}});
  for (std::int64_t t = 0; t < 1000; ++t) {
    const double v = sine.at_tick(7, 1, t, 13);
    CHECK(v >= 20.0 - 1e-9);
    CHECK(v <= 30.0 + 1e-9);
  }
  const auto hot = Generator::from_json(
      {{"kind", "overheat"}, {"min", 20}, {"max", 30}, {"startMs", 0}, {"ratePerSec", 100}, {"limit", 95}});
  CHECK(hot.at_tick(1, 1, 100000, 50) == 95.0);

  const auto rnd = Generator::from_json({{"kind", "random_per_read"}, {"min", 0}, {"max", 1}});
  CHECK(rnd.per_read(1, 1, 0) != rnd.per_read(1, 1, 1));
  CHECK(rnd.per_read(1, 1, 5) == rnd.per_read(1, 1, 5));
  CHECK(Generator::from_json(rnd.to_json()).to_json() == rnd.to_json());
  CHECK(Generator::from_json(hot.to_json()).to_json() == hot.to_json());

  CHECK_THROWS_AS(Generator::from_json({{"kind", "square"}}), ConfigError);
  CHECK_THROWS_AS(Generator::from_json({{"kind", "sine"}, {"min", 1}}), ConfigError);
  CHECK_THROWS_AS(Generator::from_json({{"kind", "random"}, {"min", 2}, {"max", 1}}), ConfigError);
  CHECK_THROWS_AS(Generator::from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("cooling sim serves the fixture registers") {
  ModbusCoolingSim sim(ModbusFixture::cooling_constant(23.5, 1200), 1);
  CHECK(hex(sim.respond(unhex("000100000006010300000002"))) == "00010000000701030400eb04b0");
  // Illegal data address, illegal function, illegal data value.
  CHECK(hex(sim.respond(unhex("000200000006010300050001"))) == "000200000003018302");
  CHECK(hex(sim.respond(unhex("000300000006010400000001"))) == "000300000003018401");
  CHECK(hex(sim.respond(unhex("000400000006010300000000"))) == "000400000003018303");
  CHECK(hex(sim.respond(unhex("00050000000601030000007E"))) == "000500000003018303");
  // Window running past the map.
  CHECK(hex(sim.respond(unhex("000600000006010300010002"))) == "000600000003018302");
  CHECK(sim.requests_served() == 1);

  sim.set_override(0, 850);
  CHECK(sim.current(0) == 850);
  CHECK(hex(sim.respond(unhex("000700000006010300000001"))) == "0007000000050103020352");
  sim.clear_overrides();
  CHECK(sim.current(0) == 235);
  CHECK_FALSE(sim.current(9).has_value());
}

TEST_CASE("cooling sim is deterministic per seed") {
  ModbusCoolingSim a(random_fixture(), 42);
  ModbusCoolingSim b(random_fixture(), 42);
  ModbusCoolingSim c(random_fixture(), 43);
  bool differs = false;
  for (std::int64_t t = 0; t < 200; ++t) {
    CHECK(a.registers_at(t) == b.registers_at(t));
    differs = differs || a.registers_at(t) != c.registers_at(t);
    for (const auto r : a.registers_at(t)) CHECK(r <= 5000);
  }
  CHECK(differs);
  // Engineering values are quantised through the register scale.
  ModbusCoolingSim hot(ModbusFixture::cooling(true), 1);
  CHECK(hot.registers_at(0).size() == 2);
}

TEST_CASE("cooling sim responses always decode") {
  ModbusCoolingSim sim(ModbusFixture::cooling(), 9);
  auto g = testing::rng(61);
  for (int i = 0; i < 50000; ++i) {
    std::vector<std::uint8_t> adu{static_cast<std::uint8_t>(g()), static_cast<std::uint8_t>(g()), 0, 0, 0, 6,
                                  static_cast<std::uint8_t>(g()),
                                  static_cast<std::uint8_t>(g() % 4 ? 0x03 : g() % 256),
                                  static_cast<std::uint8_t>(g() % 8 ? 0 : g()),
                                  static_cast<std::uint8_t>(g() % 4),
                                  static_cast<std::uint8_t>(g() % 8 ? 0 : g()),
                                  static_cast<std::uint8_t>(g() % 4)};
    const auto reply = sim.respond(adu);
    REQUIRE_FALSE(reply.empty());
    const auto decoded = modbus::decode_response(reply);
    REQUIRE_FALSE(std::holds_alternative<modbus::ProtocolViolation>(decoded));
    REQUIRE_FALSE(std::holds_alternative<modbus::NeedMoreBytes>(decoded));
    // Transaction ids are echoed.
    CHECK(reply[0] == adu[0]);
    CHECK(reply[1] == adu[1]);
  }
}

TEST_CASE("cooling sim over TCP") {
  ModbusCoolingSim sim(ModbusFixture::cooling_constant(23.5, 1200), 1);
  sim.start(0);
  auto sock = net::connect_tcp({"127.0.0.1", sim.port()}, net::Millis(1000));
  net::PlainStream stream(std::move(sock));
  // Two requests in one write are answered in order.
  auto both = unhex("000100000006010300000002");
  const auto second = unhex("000200000006010300010001");
  both.insert(both.end(), second.begin(), second.end());
  stream.write_all(both);
  std::vector<std::uint8_t> got;
  std::array<std::uint8_t, 256> buf{};
  while (got.size() < 13 + 11) {
    const auto n = stream.read_some(buf, net::Millis(1000));
    REQUIRE(n > 0);
    got.insert(got.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n));
  }
  CHECK(hex(got) == "00010000000701030400eb04b0" "00020000000501030204b0");
  sim.stop();
  CHECK_THROWS(stream.read_some(buf, net::Millis(1000)));
}

TEST_CASE("legacy sim answers the node protocol") {
  LegacyNodeSim sim(LegacyFixture::plc(), 3);
  const auto ns = call(sim, R"({"op":"read","rid":1,"ns":0,"id":2255})");
  CHECK(ns["value"].size() == 3);
  const auto temp = call(sim, R"({"op":"read","rid":2,"ns":2,"id":1001})");
  CHECK(temp["ok"] == true);
  CHECK(temp["type"] == "Double");
  CHECK(temp["value"].get<double>() >= 180.0);
  CHECK(temp["value"].get<double>() <= 220.0);
  CHECK(call(sim, R"({"op":"read","rid":3,"ns":2,"id":"name"})")["value"] == "X20CP1686X");
  CHECK(call(sim, R"({"op":"read","rid":4,"ns":2,"id":1003})")["value"] == true);
  CHECK(call(sim, R"({"op":"read","rid":5,"ns":2,"id":1002})")["type"] == "Int32");
  CHECK(call(sim, R"({"op":"read","rid":6,"ns":2,"id":9})")["err"] == "BAD_NODE_UNKNOWN");
  CHECK(call(sim, R"({"op":"read","rid":7,"ns":2,"id":100})")["err"] == "BAD_NODE_UNKNOWN");
  CHECK(call(sim, R"({"op":"fly","rid":8})")["err"] == "BAD_MALFORMED");

  const auto root = snap::parse_browse(call(sim, R"({"op":"browse","rid":9,"ns":0,"id":85})"));
  CHECK_FALSE(root.parent);
  CHECK(root.children.size() == 2);
  const auto attrs = snap::parse_attrs(call(sim, R"({"op":"attrs","rid":10,"ns":2,"id":100})"));
  CHECK(attrs.node_class == snap::NodeClass::Object);
  CHECK(attrs.description == "Injection moulding unit");

  sim.set_value(core::NodeId(2, 1001), 199.0);
  CHECK(sim.current(core::NodeId(2, 1001))->variant == core::DataVariant{199.0});
  sim.clear_values();
  CHECK(sim.value_at(core::NodeId(2, 1001), 10) == LegacyNodeSim(LegacyFixture::plc(), 3).value_at(core::NodeId(2, 1001), 10));
}

TEST_CASE("test server draws a fresh value on every read") {
  LegacyNodeSim sim(LegacyFixture::test_server(), 5);
  std::vector<core::DataValue> seen;
  sim.set_read_observer([&](const core::NodeId&, const core::DataValue& v, auto) { seen.push_back(v); });
  sim.start(0);
  auto client = snap::SnapClient::connect_plain({"127.0.0.1", sim.port()});
  const auto a = client.read(core::NodeId(1, 1)).value;
  const auto b = client.read(core::NodeId(1, 1)).value;
  CHECK(a.variant != b.variant);
  CHECK(sim.reads_served() == 2);
  REQUIRE(seen.size() == 2);
  CHECK(seen[0] == a);
  CHECK(seen[1] == b);
}

TEST_CASE("legacy fixture validation") {
  CHECK_THROWS_AS(LegacyFixture::from_json(nlohmann::json::parse(R"({"namespaceArray":[],"nodes":[]})")), ConfigError);
  CHECK_THROWS_AS(LegacyFixture::from_json(nlohmann::json::parse(
                      R"({"namespaceArray":["u"],"nodes":[{"ns":3,"id":1,"browsePath":"A","dataType":"Double"}]})")),
                  ConfigError);
  CHECK_THROWS_AS(ModbusFixture::from_json(nlohmann::json::parse(
                      R"({"registers":[{"address":0,"scale":"0"}]})")),
                  ConfigError);
  testing::TempDir dir("fixture");
  CHECK_THROWS_AS(LegacyFixture::load(dir / "missing.json"), ConfigError);
}
