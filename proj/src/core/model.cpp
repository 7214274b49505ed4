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

#include "sigma/core/model.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace sigma::core {

namespace {

constexpr std::array<std::string_view, 8> kKindNames = {"Boolean", "Int16", "Int32",  "Int64",
                                                        "Float",   "Double", "String", "DateTime"};

// 1601-01-01 → 1970-01-01 in 100 ns ticks.
constexpr std::int64_t kOpcUaEpochOffsetTicks = 116444736000000000LL;

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

template <typename Int>
Int checked_int(std::int64_t v, DataKind target, const std::string& shown) {
  if (v < std::numeric_limits<Int>::min() || v > std::numeric_limits<Int>::max()) {
    throw ValueConversionError(shown, target, "out of range");
  }
  return static_cast<Int>(v);
}

// Integral doubles within int64 range become int64; everything else fails.
std::int64_t integral_double(double d, DataKind target, const std::string& shown) {
  if (!std::isfinite(d) || std::trunc(d) != d) {
    throw ValueConversionError(shown, target, "not integral");
  }
  // 2^63 is exactly representable; anything >= it overflows.
  if (d < -9223372036854775808.0 || d >= 9223372036854775808.0) {
    throw ValueConversionError(shown, target, "out of range");
  }
  return static_cast<std::int64_t>(d);
}

DataVariant from_integer(std::int64_t v, DataKind target, const std::string& shown) {
  switch (target) {
    case DataKind::Boolean:
      return v != 0;
    case DataKind::Int16:
      return checked_int<std::int16_t>(v, target, shown);
    case DataKind::Int32:
      return checked_int<std::int32_t>(v, target, shown);
    case DataKind::Int64:
      return v;
    case DataKind::Float:
      return static_cast<float>(v);
    case DataKind::Double:
      return static_cast<double>(v);
    case DataKind::String:
      return std::to_string(v);
    case DataKind::DateTime:
      break;
  }
  throw ValueConversionError(shown, target, "integer has no time unit");
}

DataVariant from_double(double d, DataKind target, const std::string& shown) {
  switch (target) {
    case DataKind::Boolean:
      if (std::isnan(d)) throw ValueConversionError(shown, target, "NaN has no truth value");
      return d != 0.0;
    case DataKind::Int16:
    case DataKind::Int32:
    case DataKind::Int64:
      return from_integer(integral_double(d, target, shown), target, shown);
    case DataKind::Float:
      if (std::isfinite(d) && std::fabs(d) > static_cast<double>(std::numeric_limits<float>::max())) {
        // Nearest float would be infinity; treat as overflow.
        throw ValueConversionError(shown, target, "out of range");
      }
      return static_cast<float>(d);
    case DataKind::Double:
      return d;
    case DataKind::String:
    case DataKind::DateTime:
      break;
  }
  throw ValueConversionError(shown, target, "unsupported conversion from floating point");
}

std::int64_t checked_mul_add(std::int64_t a, std::int64_t b, std::int64_t c, const std::string& shown) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out) || __builtin_add_overflow(out, c, &out)) {
    throw ValueConversionError(shown, DataKind::DateTime, "out of range");
  }
  return out;
}

}  // namespace

DeviceAlias::DeviceAlias(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw ConfigError("device alias must not be empty");
  if (name_.find_first_of(":/") != std::string::npos) {
    throw ConfigError("device alias '" + name_ + "' must not contain ':' or '/'");
  }
}

bool is_valid_string_identifier(std::string_view text) { return !text.empty() && !all_digits(text); }

NodeId::NodeId(std::uint16_t ns, std::string id) : ns_(ns), id_(std::move(id)) {
  if (!is_valid_string_identifier(std::get<std::string>(id_))) {
    throw ConfigError("invalid string node identifier '" + std::get<std::string>(id_) +
                      "' (must be non-empty and not purely numeric)");
  }
}

std::string NodeId::id_string() const {
  if (is_numeric()) return std::to_string(numeric());
  return text();
}

std::string NodeId::to_string() const {
  return "ns=" + std::to_string(ns_) + (is_numeric() ? ";i=" : ";s=") + id_string();
}

std::optional<std::uint16_t> NamespaceTable::index_of(std::string_view uri) const {
  for (std::size_t i = 0; i < uris.size(); ++i) {
    if (uris[i] == uri) return static_cast<std::uint16_t>(i);
  }
  return std::nullopt;
}

std::string_view kind_name(DataKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<DataKind> parse_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<DataKind>(i);
  }
  return std::nullopt;
}

std::string_view time_source_name(DateTimeSource source) noexcept {
  switch (source) {
    case DateTimeSource::EpochNanos:
      return "EpochNanos";
    case DateTimeSource::UnixSeconds:
      return "UnixSeconds";
    case DateTimeSource::OpcUaTicks:
      return "OpcUaTicks";
  }
  return "EpochNanos";
}

std::optional<DateTimeSource> parse_time_source(std::string_view name) noexcept {
  for (auto s : {DateTimeSource::EpochNanos, DateTimeSource::UnixSeconds, DateTimeSource::OpcUaTicks}) {
    if (time_source_name(s) == name) return s;
  }
  return std::nullopt;
}

std::string to_string(const DataVariant& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, DateTime>) {
          return std::to_string(x.ns) + "ns";
        } else if constexpr (std::is_floating_point_v<T>) {
          std::ostringstream os;
          os.precision(std::numeric_limits<T>::max_digits10);
          os << x;
          return os.str();
        } else {
          return std::to_string(x);
        }
      },
      v);
}

StoreKey make_store_key(const DeviceAlias& alias, const NodeId& node) {
  return StoreKey(alias.str() + ":" + std::to_string(node.ns()) + ":" + node.id_string());
}

StoreKey::Parts StoreKey::parse(std::string_view rendered) {
  const auto bad = [&](const char* why) {
    return ConfigError("malformed store key '" + std::string(rendered) + "': " + why);
  };
  const auto first = rendered.find(':');
  if (first == std::string_view::npos) throw bad("missing ':'");
  const auto second = rendered.find(':', first + 1);
  if (second == std::string_view::npos) throw bad("missing namespace separator");

  const auto ns_text = rendered.substr(first + 1, second - first - 1);
  if (!all_digits(ns_text) || (ns_text.size() > 1 && ns_text[0] == '0')) throw bad("bad namespace index");
  std::uint32_t ns = 0;
  auto [p, ec] = std::from_chars(ns_text.data(), ns_text.data() + ns_text.size(), ns);
  if (ec != std::errc{} || ns > 0xFFFF) throw bad("namespace index out of range");

  DeviceAlias alias{std::string(rendered.substr(0, first))};
  const auto id_text = rendered.substr(second + 1);
  if (all_digits(id_text)) {
    if (id_text.size() > 1 && id_text[0] == '0') throw bad("numeric identifier with leading zero");
    std::uint32_t id = 0;
    auto [q, ec2] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec2 != std::errc{}) throw bad("numeric identifier out of range");
    return Parts{std::move(alias), NodeId(static_cast<std::uint16_t>(ns), id)};
  }
  if (id_text.empty()) throw bad("empty identifier");
  return Parts{std::move(alias), NodeId(static_cast<std::uint16_t>(ns), std::string(id_text))};
}

StoreKey StoreKey::from_string(std::string rendered) {
  parse(rendered);
  return StoreKey(std::move(rendered));
}

std::string assemble_browse_path(const DeviceAlias& alias, std::span<const std::string> segments) {
  std::string path = "Objects/" + alias.str();
  for (const auto& seg : segments) {
    if (seg.empty()) throw StructuralError("empty browse name in path below '" + path + "'");
    if (seg.find('/') != std::string::npos) {
      throw StructuralError("browse name '" + seg + "' contains '/' (ambiguous path)");
    }
    path += '/';
    path += seg;
  }
  return path;
}

std::string to_string(const RawScalar& raw) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return to_string(DataVariant{x});
        } else if constexpr (std::is_same_v<T, std::string>) {
          return "\"" + x + "\"";
        } else if constexpr (std::is_same_v<T, UnixSeconds>) {
          return to_string(DataVariant{x.seconds}) + "s(unix)";
        } else if constexpr (std::is_same_v<T, OpcUaTicks>) {
          return std::to_string(x.ticks) + "ticks(opcua)";
        } else {
          return std::to_string(x.ns) + "ns(epoch)";
        }
      },
      raw);
}

ValueConversionError::ValueConversionError(std::string offending, DataKind target, const std::string& reason)
    : ConversionError("cannot convert " + offending + " to " + std::string(kind_name(target)) + ": " + reason),
      offending_(std::move(offending)),
      target_(target) {}

DataVariant normalize_raw(const RawScalar& raw, DataKind target) {
  const std::string shown = to_string(raw);
  return std::visit(
      [&](const auto& x) -> DataVariant {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (target == DataKind::String || target == DataKind::DateTime) {
            throw ValueConversionError(shown, target, "unsupported conversion from Boolean");
          }
          return from_integer(x ? 1 : 0, target, shown);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return from_integer(x, target, shown);
        } else if constexpr (std::is_same_v<T, double>) {
          return from_double(x, target, shown);
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (target != DataKind::String) throw ValueConversionError(shown, target, "text is not numeric data");
          return x;
        } else {
          if (target != DataKind::DateTime) {
            throw ValueConversionError(shown, target, "time value requires DateTime");
          }
          if constexpr (std::is_same_v<T, UnixSeconds>) {
            const double ns = x.seconds * 1e9;
            if (!std::isfinite(ns) || ns < -9.2e18 || ns > 9.2e18) {
              throw ValueConversionError(shown, target, "out of range");
            }
            return DateTime{static_cast<std::int64_t>(std::llround(ns))};
          } else if constexpr (std::is_same_v<T, OpcUaTicks>) {
            std::int64_t since_unix = 0;
            if (__builtin_sub_overflow(x.ticks, kOpcUaEpochOffsetTicks, &since_unix)) {
              throw ValueConversionError(shown, target, "out of range");
            }
            return DateTime{checked_mul_add(since_unix, 100, 0, shown)};
          } else {
            return DateTime{x.ns};
          }
        }
      },
      raw);
}

}  // namespace sigma::core
