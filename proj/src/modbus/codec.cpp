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

#include "sigma/modbus/codec.hpp"

#include <cctype>
#include <cstdlib>

namespace sigma::modbus {

namespace {

constexpr double kPow10[] = {1e0,  1e1,  1e2,  1e3,  1e4,  1e5,  1e6,  1e7,  1e8,  1e9,  1e10, 1e11,
                             1e12, 1e13, 1e14, 1e15, 1e16, 1e17, 1e18, 1e19, 1e20, 1e21, 1e22};
constexpr std::int64_t kMaxMantissa = std::int64_t{1} << 36;
constexpr int kMaxExponent = 22;

std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_mbap(std::vector<std::uint8_t>& out, std::uint16_t txn, std::uint16_t pdu_length, std::uint8_t unit) {
  put16(out, txn);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(pdu_length + 1));
  out.push_back(unit);
}

__int128 pow10_int(int k) {
  __int128 p = 1;
  for (int i = 0; i < k; ++i) p *= 10;
  return p;
}

}  // namespace

std::variant<std::size_t, ProtocolViolation> frame_size(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMbapSize) return std::size_t{0};
  if (be16(bytes, 2) != 0) return ProtocolViolation{"protocol identifier is not 0"};
  const std::uint16_t length = be16(bytes, 4);
  if (length < 2) return ProtocolViolation{"MBAP length " + std::to_string(length) + " too small"};
  if (length > kMaxMbapLength) return ProtocolViolation{"MBAP length " + std::to_string(length) + " too large"};
  return std::size_t{6} + length;
}

std::vector<std::uint8_t> encode_read_request(std::uint16_t transaction_id, std::uint8_t unit_id,
                                              const ReadHoldingRegsRequest& request) {
  if (request.quantity < 1 || request.quantity > kMaxReadQuantity) {
    throw ProtocolError("register quantity " + std::to_string(request.quantity) + " outside [1, 125]");
  }
  std::vector<std::uint8_t> out;
  out.reserve(12);
  put_mbap(out, transaction_id, 5, unit_id);
  out.push_back(kReadHoldingRegisters);
  put16(out, request.start_address);
  put16(out, request.quantity);
  return out;
}

std::vector<std::uint8_t> encode_read_response(const ReadHoldingRegsResponse& response) {
  if (response.registers.empty() || response.registers.size() > kMaxReadQuantity) {
    throw ProtocolError("response register count outside [1, 125]");
  }
  const auto byte_count = static_cast<std::uint16_t>(response.registers.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(kMbapSize + 2 + byte_count);
  put_mbap(out, response.transaction_id, static_cast<std::uint16_t>(2 + byte_count), response.unit_id);
  out.push_back(kReadHoldingRegisters);
  out.push_back(static_cast<std::uint8_t>(byte_count));
  for (auto r : response.registers) put16(out, r);
  return out;
}

std::vector<std::uint8_t> encode_exception(const ExceptionResponse& response) {
  std::vector<std::uint8_t> out;
  out.reserve(kMbapSize + 2);
  put_mbap(out, response.transaction_id, 2, response.unit_id);
  out.push_back(static_cast<std::uint8_t>(response.function_code | kExceptionBit));
  out.push_back(response.exception_code);
  return out;
}

ResponseDecode decode_response(std::span<const std::uint8_t> bytes) {
  const auto size = frame_size(bytes);
  if (auto* v = std::get_if<ProtocolViolation>(&size)) return *v;
  const std::size_t n = std::get<std::size_t>(size);
  if (n == 0 || bytes.size() < n) return NeedMoreBytes{};

  const std::uint16_t txn = be16(bytes, 0);
  const std::uint8_t unit = bytes[6];
  const std::uint8_t fc = bytes[7];
  const auto pdu = bytes.subspan(7, n - 7);

  if (fc & kExceptionBit) {
    if (pdu.size() != 2) return ProtocolViolation{"exception response must carry exactly one code byte"};
    return ExceptionResponse{txn, unit, fc, pdu[1]};
  }
  if (fc != kReadHoldingRegisters) {
    return ProtocolViolation{"unsupported function code " + std::to_string(fc)};
  }
  if (pdu.size() < 2) return ProtocolViolation{"truncated read response"};
  const std::uint8_t byte_count = pdu[1];
  if (byte_count == 0 || byte_count % 2 != 0 || byte_count / 2 > kMaxReadQuantity) {
    return ProtocolViolation{"invalid byte count " + std::to_string(byte_count)};
  }
  if (pdu.size() - 2 != byte_count) {
    return ProtocolViolation{"byte count " + std::to_string(byte_count) + " does not match " +
                             std::to_string(pdu.size() - 2) + " register bytes"};
  }
  ReadHoldingRegsResponse r{txn, unit, {}};
  r.registers.reserve(byte_count / 2);
  for (std::size_t i = 0; i < byte_count; i += 2) r.registers.push_back(be16(pdu, 2 + i));
  return r;
}

RequestDecode decode_request(std::span<const std::uint8_t> bytes) {
  const auto size = frame_size(bytes);
  if (auto* v = std::get_if<ProtocolViolation>(&size)) return *v;
  const std::size_t n = std::get<std::size_t>(size);
  if (n == 0 || bytes.size() < n) return NeedMoreBytes{};

  const std::uint16_t txn = be16(bytes, 0);
  const std::uint8_t unit = bytes[6];
  const std::uint8_t fc = bytes[7];
  if (fc != kReadHoldingRegisters) return OtherFunctionRequest{txn, unit, fc};
  if (n != 12) return ProtocolViolation{"read request must be 12 bytes"};
  return ReadRequestFrame{txn, unit, ReadHoldingRegsRequest{be16(bytes, 8), be16(bytes, 10)}};
}

DecimalScale DecimalScale::parse(const std::string& text) {
  const auto bad = [&](const char* why) { return ConfigError("invalid scale '" + text + "': " + why); };
  std::size_t i = 0;
  if (i < text.size() && text[i] == '+') ++i;
  if (i < text.size() && text[i] == '-') throw bad("must be positive");
  std::int64_t mantissa = 0;
  int exponent = 0;
  bool digits = false;
  bool dot = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.') {
      if (dot) throw bad("two decimal points");
      dot = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) break;
    digits = true;
    if (mantissa > (kMaxMantissa * 10)) throw bad("too many significant digits");
    mantissa = mantissa * 10 + (c - '0');
    if (dot) --exponent;
  }
  if (!digits) throw bad("no digits");
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    char* end = nullptr;
    const long e = std::strtol(text.c_str() + i + 1, &end, 10);
    if (end == text.c_str() + i + 1 || *end != '\0' || e < -100 || e > 100) throw bad("bad exponent");
    exponent += static_cast<int>(e);
    i = text.size();
  }
  if (i != text.size()) throw bad("trailing characters");
  if (mantissa == 0) throw bad("must be positive");
  while (mantissa % 10 == 0) {
    mantissa /= 10;
    ++exponent;
  }
  if (mantissa > kMaxMantissa) throw bad("too many significant digits");
  if (exponent < -kMaxExponent || exponent > kMaxExponent) throw bad("exponent outside [-22, 22]");
  DecimalScale s;
  s.mantissa_ = mantissa;
  s.exponent_ = exponent;
  return s;
}

std::string DecimalScale::to_string() const {
  std::string digits = std::to_string(mantissa_);
  if (exponent_ >= 0) return digits + std::string(static_cast<std::size_t>(exponent_), '0');
  const auto frac = static_cast<std::size_t>(-exponent_);
  if (digits.size() <= frac) digits.insert(0, frac - digits.size() + 1, '0');
  digits.insert(digits.size() - frac, ".");
  return digits;
}

void validate_binding(const RegisterBinding& b) {
  using core::DataKind;
  if (b.target_kind != DataKind::Int16 && b.target_kind != DataKind::Int32 && b.target_kind != DataKind::Double) {
    throw ConfigError("register binding '" + b.browse_name + "' must target Int16, Int32 or Double");
  }
  if (b.browse_name.empty() || b.browse_name.find('/') != std::string::npos) {
    throw ConfigError("register binding at address " + std::to_string(b.address) + " needs a browse name without '/'");
  }
}

core::DataVariant apply_binding(std::uint16_t raw, const RegisterBinding& b) {
  const std::int64_t value = b.is_signed ? static_cast<std::int16_t>(raw) : static_cast<std::int64_t>(raw);
  // |value| < 2^16 and mantissa <= 2^36, so the product is exact below 2^53.
  const std::int64_t product = value * b.scale.mantissa();
  const int e = b.scale.exponent();
  const std::string shown = std::to_string(value) + " x " + b.scale.to_string();

  if (b.target_kind == core::DataKind::Double) {
    const double p = static_cast<double>(product);
    // One correctly rounded IEEE operation on exact operands.
    return e >= 0 ? p * kPow10[e] : p / kPow10[-e];
  }

  std::int64_t scaled = 0;
  if (e >= 0) {
    const __int128 wide = static_cast<__int128>(product) * pow10_int(e);  // e <= 22, no overflow
    if (wide > INT64_MAX || wide < INT64_MIN) throw core::ValueConversionError(shown, b.target_kind, "out of range");
    scaled = static_cast<std::int64_t>(wide);
  } else {
    const __int128 divisor = pow10_int(-e);
    if (product % divisor != 0) throw core::ValueConversionError(shown, b.target_kind, "result is not integral");
    scaled = static_cast<std::int64_t>(product / divisor);
  }
  return core::normalize_raw(core::RawScalar{scaled}, b.target_kind);
}

}  // namespace sigma::modbus
