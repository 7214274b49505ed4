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
 * @file codec.hpp
 * @brief Modbus/TCP (MBAP) codec for Read Holding Registers (0x03).
 *
 * Decoders are total: any byte string yields a frame, an exception
 * response, a need-more-bytes marker or a protocol violation.
 */

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sigma/core/model.hpp"

namespace sigma::modbus {

inline constexpr std::uint8_t kReadHoldingRegisters = 0x03;
inline constexpr std::uint8_t kExceptionBit = 0x80;
inline constexpr std::uint16_t kMaxReadQuantity = 125;
inline constexpr std::size_t kMbapSize = 7;
/// Largest legal MBAP length field (unit id + 253-byte PDU).
inline constexpr std::uint16_t kMaxMbapLength = 254;

enum class ExceptionCode : std::uint8_t {
  IllegalFunction = 1,
  IllegalDataAddress = 2,
  IllegalDataValue = 3,
  ServerDeviceFailure = 4,
};

struct MbapHeader {
  std::uint16_t transaction_id = 0;
  std::uint16_t protocol_id = 0;
  std::uint16_t length = 0;
  std::uint8_t unit_id = 0;

  bool operator==(const MbapHeader&) const = default;
};

struct ReadHoldingRegsRequest {
  std::uint16_t start_address = 0;
  std::uint16_t quantity = 1;

  bool operator==(const ReadHoldingRegsRequest&) const = default;
};

struct ReadRequestFrame {
  std::uint16_t transaction_id = 0;
  std::uint8_t unit_id = 0;
  ReadHoldingRegsRequest request;

  bool operator==(const ReadRequestFrame&) const = default;
};

/// A request whose function code is not 0x03 (answered with exception 1).
struct OtherFunctionRequest {
  std::uint16_t transaction_id = 0;
  std::uint8_t unit_id = 0;
  std::uint8_t function_code = 0;
};

struct ReadHoldingRegsResponse {
  std::uint16_t transaction_id = 0;
  std::uint8_t unit_id = 0;
  std::vector<std::uint16_t> registers;

  bool operator==(const ReadHoldingRegsResponse&) const = default;
};

struct ExceptionResponse {
  std::uint16_t transaction_id = 0;
  std::uint8_t unit_id = 0;
  std::uint8_t function_code = kReadHoldingRegisters | kExceptionBit;
  std::uint8_t exception_code = 0;

  bool operator==(const ExceptionResponse&) const = default;
};

struct NeedMoreBytes {};

struct ProtocolViolation {
  std::string reason;
};

using ResponseDecode = std::variant<NeedMoreBytes, ReadHoldingRegsResponse, ExceptionResponse, ProtocolViolation>;
using RequestDecode = std::variant<NeedMoreBytes, ReadRequestFrame, OtherFunctionRequest, ProtocolViolation>;

/// Size of the complete ADU at the front of `bytes`, 0 when the header is
/// incomplete, or a ProtocolViolation for impossible headers.
std::variant<std::size_t, ProtocolViolation> frame_size(std::span<const std::uint8_t> bytes);

/// 12-byte request; throws ProtocolError when quantity is outside [1, 125].
std::vector<std::uint8_t> encode_read_request(std::uint16_t transaction_id, std::uint8_t unit_id,
                                              const ReadHoldingRegsRequest& request);
std::vector<std::uint8_t> encode_read_response(const ReadHoldingRegsResponse& response);
std::vector<std::uint8_t> encode_exception(const ExceptionResponse& response);

ResponseDecode decode_response(std::span<const std::uint8_t> bytes);
RequestDecode decode_request(std::span<const std::uint8_t> bytes);

/// Exact decimal scale factor (mantissa × 10^exponent).
class DecimalScale {
 public:
  DecimalScale() = default;
  /// "0.1", "1", "2.5e-3"; throws ConfigError unless strictly positive.
  static DecimalScale parse(const std::string& text);

  std::int64_t mantissa() const noexcept { return mantissa_; }
  int exponent() const noexcept { return exponent_; }
  std::string to_string() const;

  bool operator==(const DecimalScale&) const = default;

 private:
  std::int64_t mantissa_ = 1;
  int exponent_ = 0;
};

struct RegisterBinding {
  std::uint16_t address = 0;
  DecimalScale scale;
  core::DataKind target_kind = core::DataKind::Int32;
  core::NodeId node_id;
  std::string browse_name;
  /// Interpret the register as two's complement int16 before scaling.
  bool is_signed = false;
};

/// Throws ConfigError when the binding violates its invariants.
void validate_binding(const RegisterBinding& binding);

/// raw × scale converted to the binding's kind: Double takes the correctly
/// rounded nearest double of the exact decimal product; integer kinds require
/// an integral product in range. Throws ConversionError.
core::DataVariant apply_binding(std::uint16_t raw, const RegisterBinding& binding);

}  // namespace sigma::modbus
