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

#include "sigma/snap/frame.hpp"

namespace sigma::snap {

std::vector<std::uint8_t> encode_frame(const Json& body) {
  if (!body.is_object()) throw ProtocolError("SNAP frame body must be a JSON object");
  std::string text;
  try {
    text = body.dump();
  } catch (const nlohmann::json::type_error& e) {
    throw ProtocolError(std::string("SNAP frame body is not valid UTF-8: ") + e.what());
  }
  if (text.size() > kMaxFrameBody) {
    throw ProtocolError("SNAP frame body of " + std::to_string(text.size()) + " bytes exceeds the 1 MiB limit");
  }
  const auto n = static_cast<std::uint32_t>(text.size());
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderSize + text.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  if (bytes.size() < kFrameHeaderSize) return r;
  const std::size_t length = (std::size_t{bytes[0]} << 24) | (std::size_t{bytes[1]} << 16) |
                             (std::size_t{bytes[2]} << 8) | std::size_t{bytes[3]};
  if (length > kMaxFrameBody) {
    r.status = DecodeResult::Status::Oversize;
    r.error = "declared frame length " + std::to_string(length) + " exceeds the 1 MiB limit";
    return r;
  }
  if (bytes.size() < kFrameHeaderSize + length) return r;

  r.consumed = kFrameHeaderSize + length;
  const auto body = bytes.subspan(kFrameHeaderSize, length);
  try {
    r.body = Json::parse(body.begin(), body.end());
    if (!r.body.is_object()) {
      r.status = DecodeResult::Status::Malformed;
      r.error = "frame body is not a JSON object";
      r.body = Json();
      return r;
    }
    r.status = DecodeResult::Status::Complete;
  } catch (const nlohmann::json::exception& e) {
    r.status = DecodeResult::Status::Malformed;
    r.error = e.what();
    r.body = Json();
  }
  return r;
}

DecodeResult FrameReader::next() {
  DecodeResult r = decode_frame(buffer_);
  if (r.consumed > 0) buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
  return r;
}

}  // namespace sigma::snap
