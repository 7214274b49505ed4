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

#include <cstdlib>

#include "sigma/modbus/codec.hpp"
#include "test_support.hpp"

using namespace sigma;
using namespace sigma::modbus;
using sigma::testing::hex;
using sigma::testing::unhex;

namespace {

// Reference encoders written straight from the MBAP field layout.
std::vector<std::uint8_t> ref_request(std::uint16_t txn, std::uint8_t unit, std::uint16_t addr, std::uint16_t qty) {
  return {static_cast<std::uint8_t>(txn >> 8), static_cast<std::uint8_t>(txn), 0, 0, 0, 6, unit, 0x03,
          static_cast<std::uint8_t>(addr >> 8), static_cast<std::uint8_t>(addr), static_cast<std::uint8_t>(qty >> 8),
          static_cast<std::uint8_t>(qty)};
}

std::vector<std::uint8_t> ref_response(std::uint16_t txn, std::uint8_t unit, const std::vector<std::uint16_t>& regs) {
  const auto len = static_cast<std::uint16_t>(3 + 2 * regs.size());
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(txn >> 8), static_cast<std::uint8_t>(txn), 0, 0,
                                static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len), unit, 0x03,
                                static_cast<std::uint8_t>(2 * regs.size())};
  for (const auto r : regs) {
    out.push_back(static_cast<std::uint8_t>(r >> 8));
    out.push_back(static_cast<std::uint8_t>(r));
  }
  return out;
}

RegisterBinding binding(const std::string& scale, core::DataKind kind, bool is_signed = false) {
  RegisterBinding b;
  b.address = 0;
  b.scale = DecimalScale::parse(scale);
  b.target_kind = kind;
  b.node_id = core::NodeId(1, "temp");
  b.browse_name = "Temp";
  b.is_signed = is_signed;
  return b;
}

}  // namespace

TEST_CASE("read request golden bytes") {
  CHECK(hex(encode_read_request(1, 1, {0, 2})) == "000100000006010300000002");
  CHECK(hex(encode_read_request(0, 0, {0, 1})) == "000000000006000300000001");
  CHECK_THROWS_AS(encode_read_request(1, 1, {0, 0}), ProtocolError);
  CHECK_THROWS_AS(encode_read_request(1, 1, {0, 126}), ProtocolError);
}

TEST_CASE("response golden bytes") {
  const auto regs = decode_response(unhex("00010000000701030400EB04B0"));
  REQUIRE(std::holds_alternative<ReadHoldingRegsResponse>(regs));
  const auto& r = std::get<ReadHoldingRegsResponse>(regs);
  CHECK(r.transaction_id == 1);
  CHECK(r.unit_id == 1);
  CHECK(r.registers == std::vector<std::uint16_t>{235, 1200});

  const auto exc = decode_response(unhex("000100000003018302"));
  REQUIRE(std::holds_alternative<ExceptionResponse>(exc));
  CHECK(std::get<ExceptionResponse>(exc).function_code == 0x83);
  CHECK(std::get<ExceptionResponse>(exc).exception_code == 2);

  // byteCount says 4 but only 2 register bytes follow.
  CHECK(std::holds_alternative<ProtocolViolation>(decode_response(unhex("00010000000501030400EB"))));

  CHECK(hex(encode_read_response({1, 1, {235, 1200}})) == "00010000000701030400eb04b0");
  CHECK(hex(encode_exception({1, 1, 0x83, 2})) == "000100000003018302");
}

TEST_CASE("request and response round-trip for every quantity") {
  auto g = testing::rng(31);
  for (std::uint16_t qty = 1; qty <= kMaxReadQuantity; ++qty) {
    CAPTURE(qty);
    const auto txn = static_cast<std::uint16_t>(g());
    const auto unit = static_cast<std::uint8_t>(g());
    const auto addr = static_cast<std::uint16_t>(g());
    const auto req = encode_read_request(txn, unit, {addr, qty});
    CHECK(req == ref_request(txn, unit, addr, qty));
    const auto back = decode_request(req);
    REQUIRE(std::holds_alternative<ReadRequestFrame>(back));
    CHECK(std::get<ReadRequestFrame>(back) == ReadRequestFrame{txn, unit, {addr, qty}});

    std::vector<std::uint16_t> regs(qty);
    for (auto& r : regs) r = static_cast<std::uint16_t>(g());
    const ReadHoldingRegsResponse resp{txn, unit, regs};
    const auto bytes = encode_read_response(resp);
    CHECK(bytes == ref_response(txn, unit, regs));
    CHECK(bytes.size() == 9 + 2u * qty);
    const auto decoded = decode_response(bytes);
    REQUIRE(std::holds_alternative<ReadHoldingRegsResponse>(decoded));
    CHECK(std::get<ReadHoldingRegsResponse>(decoded) == resp);
  }
}

TEST_CASE("partial frames ask for more bytes") {
  const auto bytes = ref_response(7, 1, {1, 2, 3});
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    CAPTURE(cut);
    CHECK(std::holds_alternative<NeedMoreBytes>(decode_response(std::span(bytes).first(cut))));
  }
  const auto size = frame_size(bytes);
  REQUIRE(std::holds_alternative<std::size_t>(size));
  CHECK(std::get<std::size_t>(size) == bytes.size());
  CHECK(std::get<std::size_t>(frame_size(std::span(bytes).first(5))) == 0);
}

TEST_CASE("impossible headers and foreign function codes") {
  // Protocol id 1.
  CHECK(std::holds_alternative<ProtocolViolation>(decode_response(unhex("00010001000701030400EB04B0"))));
  CHECK(std::holds_alternative<ProtocolViolation>(frame_size(unhex("00010001000701"))));
  // MBAP length 0 and over the limit.
  CHECK(std::holds_alternative<ProtocolViolation>(frame_size(unhex("00010000000001"))));
  CHECK(std::holds_alternative<ProtocolViolation>(frame_size(unhex("00010000010001"))));
  // Function code 0x04 response.
  CHECK(std::holds_alternative<ProtocolViolation>(decode_response(unhex("00010000000501040200EB"))));
  // Codes beyond 1..4 (gateway errors etc.) still surface as typed exceptions.
  const auto gw = decode_response(unhex("00010000000301830B"));
  REQUIRE(std::holds_alternative<ExceptionResponse>(gw));
  CHECK(std::get<ExceptionResponse>(gw).exception_code == 0x0B);

  const auto other = decode_request(unhex("000500000006010400000001"));
  REQUIRE(std::holds_alternative<OtherFunctionRequest>(other));
  CHECK(std::get<OtherFunctionRequest>(other).function_code == 0x04);
  CHECK(std::get<OtherFunctionRequest>(other).transaction_id == 5);
  // Quantity 0 decodes so the server can answer with exception 3.
  const auto zero = decode_request(unhex("000100000006010300000000"));
  REQUIRE(std::holds_alternative<ReadRequestFrame>(zero));
  CHECK(std::get<ReadRequestFrame>(zero).request.quantity == 0);
  CHECK(std::holds_alternative<ProtocolViolation>(decode_request(unhex("0001000000070103000000010A"))));
}

TEST_CASE("decoders are total over random byte strings") {
  auto g = testing::rng(32);
  std::size_t outcomes[4] = {};
  for (int i = 0; i < 200000; ++i) {
    std::vector<std::uint8_t> bytes(g() % 40);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(g());
    // Bias towards plausible headers so deeper branches get exercised.
    if (bytes.size() >= 8 && g() % 2) {
      bytes[2] = bytes[3] = 0;
      bytes[4] = 0;
      bytes[5] = static_cast<std::uint8_t>(bytes.size() - 6 + static_cast<int>(g() % 3) - 1);
      bytes[7] = g() % 2 ? 0x03 : 0x83;
    }
    const auto r = decode_response(bytes);
    outcomes[r.index()]++;
    const auto q = decode_request(bytes);
    (void)q;
    if (const auto* ok = std::get_if<ReadHoldingRegsResponse>(&r)) {
      // Anything accepted re-encodes to the same prefix.
      const auto again = encode_read_response(*ok);
      CHECK(std::equal(again.begin(), again.end(), bytes.begin()));
    }
  }
  for (const auto n : outcomes) CHECK(n > 0);
}

TEST_CASE("decimal scale parsing") {
  CHECK(DecimalScale::parse("0.1") == DecimalScale::parse("1e-1"));
  CHECK(DecimalScale::parse("0.1").to_string() == "0.1");
  CHECK(DecimalScale::parse("2.5e-3").mantissa() * 1 == 25);
  CHECK(DecimalScale::parse("2.5e-3").exponent() == -4);
  CHECK(DecimalScale::parse("100").to_string() == "100");
  for (const char* bad : {"0", "-1", "", "abc", "1.2.3", "0.000", "1e"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(DecimalScale::parse(bad), ConfigError);
  }
}

TEST_CASE("apply_binding examples") {
  CHECK(apply_binding(235, binding("0.1", core::DataKind::Double)) == core::DataVariant{23.5});
  CHECK(apply_binding(1200, binding("1", core::DataKind::Int32)) == core::DataVariant{std::int32_t{1200}});
  CHECK_THROWS_AS(apply_binding(7, binding("0.5", core::DataKind::Int16)), ConversionError);
  CHECK(apply_binding(8, binding("0.5", core::DataKind::Int16)) == core::DataVariant{std::int16_t{4}});
  CHECK_THROWS_AS(apply_binding(40000, binding("1", core::DataKind::Int16)), ConversionError);
  CHECK(apply_binding(40000, binding("1", core::DataKind::Int16, true)) ==
        core::DataVariant{std::int16_t{40000 - 65536}});
  CHECK(apply_binding(0xFFFF, binding("0.1", core::DataKind::Double, true)) == core::DataVariant{-0.1});
}

TEST_CASE("binding invariants") {
  auto b = binding("1", core::DataKind::String);
  CHECK_THROWS_AS(validate_binding(b), ConfigError);
  b = binding("1", core::DataKind::Int32);
  CHECK_NOTHROW(validate_binding(b));
  b.browse_name = "a/b";
  CHECK_THROWS_AS(validate_binding(b), ConfigError);
}

TEST_CASE("apply_binding Double matches correctly rounded decimal parse") {
  // strtod of "<raw*mantissa>e<exp>" is an independent correctly rounded oracle.
  auto g = testing::rng(33);
  const char* scales[] = {"0.1", "0.01", "0.001", "0.3", "2.5", "1", "10", "0.0625", "1e-7", "3.3e2", "0.7"};
  for (int i = 0; i < 50000; ++i) {
    const auto raw = static_cast<std::uint16_t>(g());
    const auto b = binding(scales[g() % std::size(scales)], core::DataKind::Double);
    const auto text = std::to_string(static_cast<std::int64_t>(raw) * b.scale.mantissa()) + "e" +
                      std::to_string(b.scale.exponent());
    const double expected = std::strtod(text.c_str(), nullptr);
    const auto got = std::get<double>(apply_binding(raw, b));
    CAPTURE(text);
    CHECK(got == expected);
  }
}

TEST_CASE("apply_binding with scale 1 is the identity") {
  for (std::uint32_t raw = 0; raw <= 0xFFFF; raw += 7) {
    const auto r = static_cast<std::uint16_t>(raw);
    CHECK(std::get<double>(apply_binding(r, binding("1", core::DataKind::Double))) == static_cast<double>(raw));
    CHECK(std::get<std::int32_t>(apply_binding(r, binding("1", core::DataKind::Int32))) == static_cast<std::int32_t>(raw));
  }
}
