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
 * @file model.hpp
 * @brief Domain value types shared by every bridge module.
 *
 * Everything in here is an immutable value object without I/O: device
 * aliases, OPC-UA-style node identifiers, namespace tables, typed scalar
 * values and the store key that ties a mirrored variable to its device.
 */

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sigma/core/errors.hpp"

namespace sigma::core {

inline constexpr std::string_view kStandardNamespaceUri = "http://opcfoundation.org/UA/";
/// Standard node holding the server's namespace array.
inline constexpr std::uint32_t kNamespaceArrayId = 2255;
/// Standard Objects folder; the root of every browse path.
inline constexpr std::uint32_t kObjectsFolderId = 85;

/// Name of one legacy device; first segment of its browse paths and of its store keys.
class DeviceAlias {
 public:
  /// Throws ConfigError when empty or when it contains ':' or '/'.
  explicit DeviceAlias(std::string name);

  const std::string& str() const noexcept { return name_; }

  auto operator<=>(const DeviceAlias&) const = default;

 private:
  std::string name_;
};

/// (namespace index, identifier) address of a node.
///
/// String identifiers must be non-empty and must not consist of decimal
/// digits only, so that the rendered key of a string id never collides with
/// the rendered key of a numeric one.
class NodeId {
 public:
  using Identifier = std::variant<std::uint32_t, std::string>;

  NodeId() = default;
  NodeId(std::uint16_t ns, std::uint32_t id) : ns_(ns), id_(id) {}
  /// Throws ConfigError for an invalid string identifier.
  NodeId(std::uint16_t ns, std::string id);

  std::uint16_t ns() const noexcept { return ns_; }
  const Identifier& id() const noexcept { return id_; }
  bool is_numeric() const noexcept { return std::holds_alternative<std::uint32_t>(id_); }
  std::uint32_t numeric() const { return std::get<std::uint32_t>(id_); }
  const std::string& text() const { return std::get<std::string>(id_); }

  /// Identifier rendered as in a store key: base-10 or verbatim.
  std::string id_string() const;
  /// Human readable "ns=2;i=1001" / "ns=2;s=temp".
  std::string to_string() const;

  bool operator==(const NodeId&) const = default;
  auto operator<=>(const NodeId&) const = default;

 private:
  std::uint16_t ns_ = 0;
  Identifier id_ = std::uint32_t{0};
};

/// True when `text` is a valid string identifier.
bool is_valid_string_identifier(std::string_view text);

/// Ordered namespace URIs; the position is the namespace index.
struct NamespaceTable {
  std::vector<std::string> uris;

  std::size_t size() const noexcept { return uris.size(); }
  bool contains_index(std::uint16_t ns) const noexcept { return ns < uris.size(); }
  std::optional<std::uint16_t> index_of(std::string_view uri) const;

  bool operator==(const NamespaceTable&) const = default;
};

enum class DataKind : std::uint8_t { Boolean, Int16, Int32, Int64, Float, Double, String, DateTime };

std::string_view kind_name(DataKind kind) noexcept;
/// Inverse of kind_name; nullopt for unknown names.
std::optional<DataKind> parse_kind(std::string_view name) noexcept;

/// Instant as nanoseconds since the Unix epoch (UTC).
struct DateTime {
  std::int64_t ns = 0;
  auto operator<=>(const DateTime&) const = default;
};

/// Exactly one scalar payload; alternative index order equals DataKind.
using DataVariant =
    std::variant<bool, std::int16_t, std::int32_t, std::int64_t, float, double, std::string, DateTime>;

inline DataKind kind_of(const DataVariant& v) noexcept { return static_cast<DataKind>(v.index()); }
std::string to_string(const DataVariant& v);

struct DataValue {
  DataVariant variant;
  std::int64_t source_timestamp_ns = 0;

  bool operator==(const DataValue&) const = default;
};

/// How a device reported a DateTime; values are always stored as epoch ns.
enum class DateTimeSource : std::uint8_t { EpochNanos, UnixSeconds, OpcUaTicks };

std::string_view time_source_name(DateTimeSource source) noexcept;
std::optional<DateTimeSource> parse_time_source(std::string_view name) noexcept;

struct NodeDescriptor {
  NodeId node_id;
  std::string display_name;
  std::string description;
  DataKind data_kind = DataKind::Double;
  std::string browse_name;
  std::string browse_path;
  DateTimeSource time_source = DateTimeSource::EpochNanos;

  bool operator==(const NodeDescriptor&) const = default;
};

/// "<Alias>:<NamespaceIndex>:<NodeId>".
class StoreKey {
 public:
  struct Parts {
    DeviceAlias alias;
    NodeId node;
  };

  const std::string& str() const noexcept { return rendered_; }
  /// Throws ConfigError when `rendered` is not a well-formed key.
  static Parts parse(std::string_view rendered);
  /// Wraps an already rendered key after validating it.
  static StoreKey from_string(std::string rendered);

  auto operator<=>(const StoreKey&) const = default;

 private:
  friend StoreKey make_store_key(const DeviceAlias& alias, const NodeId& node);
  explicit StoreKey(std::string rendered) : rendered_(std::move(rendered)) {}

  std::string rendered_;
};

StoreKey make_store_key(const DeviceAlias& alias, const NodeId& node);

/// "Objects/<alias>/<seg>/.../<seg>"; throws StructuralError if a segment
/// contains '/' or is empty.
std::string assemble_browse_path(const DeviceAlias& alias, std::span<const std::string> segments);

/// Protocol-level scalar as delivered by a device, before normalisation.
struct UnixSeconds {
  double seconds = 0.0;
};
struct OpcUaTicks {
  /// 100 ns intervals since 1601-01-01.
  std::int64_t ticks = 0;
};
struct EpochNanos {
  std::int64_t ns = 0;
};
using RawScalar = std::variant<bool, std::int64_t, double, std::string, UnixSeconds, OpcUaTicks, EpochNanos>;

std::string to_string(const RawScalar& raw);

/// ConversionError that remembers what failed to convert.
class ValueConversionError : public ConversionError {
 public:
  ValueConversionError(std::string offending, DataKind target, const std::string& reason);

  const std::string& offending() const noexcept { return offending_; }
  DataKind target() const noexcept { return target_; }

 private:
  std::string offending_;
  DataKind target_;
};

/// Converts a raw scalar to `target`. Integers convert losslessly or fail,
/// floating point targets take the IEEE-754 nearest value, time forms map to
/// epoch nanoseconds. Integer → Boolean is 0 → false, nonzero → true.
/// Throws ValueConversionError instead of truncating.
DataVariant normalize_raw(const RawScalar& raw, DataKind target);

}  // namespace sigma::core
