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

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace sigma::sim {

/// Deterministic signal source: the value depends only on (seed, salt, tick).
///
/// JSON forms:
///   {"kind":"constant","value":23.5}
///   {"kind":"sine","min":20,"max":30,"periodMs":600000}
///   {"kind":"overheat","min":20,"max":30,"periodMs":600000,"startMs":5000,"ratePerSec":2,"limit":95}
///   {"kind":"random","min":0,"max":100}            new value every tick
///   {"kind":"random_per_read","min":0,"max":1e6}   new value on every read
class Generator {
 public:
  enum class Kind { Constant, Sine, Overheat, Random, RandomPerRead };

  static Generator constant(double value);
  /// Throws ConfigError on unknown kinds or missing fields.
  static Generator from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Value at `tick` (tick_ms wide) for a sim seeded with `seed`; `salt`
  /// separates the streams of different registers/nodes.
  double at_tick(std::uint64_t seed, std::uint64_t salt, std::int64_t tick, std::int64_t tick_ms) const;
  /// Value for the `draw`-th read of a RandomPerRead source.
  double per_read(std::uint64_t seed, std::uint64_t salt, std::uint64_t draw) const;

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_ = Kind::Constant;
  double value_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
  double period_ms_ = 1.0;
  double start_ms_ = 0.0;
  double rate_per_sec_ = 0.0;
  double limit_ = 0.0;
};

/// splitmix64 finaliser; stable across platforms.
std::uint64_t mix64(std::uint64_t x) noexcept;
/// Uniform double in [0, 1) from a 64-bit hash.
double unit_interval(std::uint64_t h) noexcept;

}  // namespace sigma::sim
