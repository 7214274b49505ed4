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
 * @file frame.hpp
 * @brief SNAP framing: 4-byte big-endian length followed by a compact JSON object.
 */

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigma/core/errors.hpp"

namespace sigma::snap {

/// Key order is preserved so frames are byte-reproducible.
using Json = nlohmann::ordered_json;

inline constexpr std::size_t kMaxFrameBody = 1024 * 1024;
inline constexpr std::size_t kFrameHeaderSize = 4;

/// Compact serialization of `body` behind its length prefix.
/// Throws ProtocolError when the body is not an object or exceeds kMaxFrameBody.
std::vector<std::uint8_t> encode_frame(const Json& body);

struct DecodeResult {
  enum class Status {
    Complete,   ///< `body` holds the object; `consumed` bytes form the frame.
    NeedMore,   ///< no complete frame buffered yet.
    Oversize,   ///< declared length above the limit; the connection must close.
    Malformed,  ///< complete frame whose body is not a UTF-8 JSON object; `consumed` skips it.
  };
  Status status = Status::NeedMore;
  Json body;
  std::size_t consumed = 0;
  std::string error;
};

/// Decodes the first frame in `bytes`; never throws.
DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

/// Accumulates a byte stream and yields frames in order.
class FrameReader {
 public:
  void append(std::span<const std::uint8_t> bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }
  /// Decodes and removes the next frame; NeedMore leaves the buffer untouched.
  DecodeResult next();
  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  std::vector<std::uint8_t> buffer_;
};

}  // namespace sigma::snap
