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

#include "sigma/sim/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sigma/core/errors.hpp"

namespace sigma::sim {

namespace {

double number(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw ConfigError(std::string("generator field '") + key + "' must be a number");
  }
  return it->get<double>();
}

double number_or(const nlohmann::json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double unit_interval(std::uint64_t h) noexcept { return static_cast<double>(h >> 11) * 0x1.0p-53; }

Generator Generator::constant(double value) {
  Generator g;
  g.kind_ = Kind::Constant;
  g.value_ = value;
  return g;
}

Generator Generator::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("generator must be an object");
  const auto kind = j.value("kind", std::string{});
  Generator g;
  if (kind == "constant") {
    g.kind_ = Kind::Constant;
    g.value_ = number(j, "value");
  } else if (kind == "sine" || kind == "overheat") {
    g.kind_ = kind == "sine" ? Kind::Sine : Kind::Overheat;
    g.min_ = number(j, "min");
    g.max_ = number(j, "max");
    g.period_ms_ = number_or(j, "periodMs", 600000);
    if (g.period_ms_ <= 0) throw ConfigError("generator periodMs must be positive");
    if (g.kind_ == Kind::Overheat) {
      g.start_ms_ = number_or(j, "startMs", 0);
      g.rate_per_sec_ = number_or(j, "ratePerSec", 1.0);
      g.limit_ = number_or(j, "limit", 95.0);
    }
  } else if (kind == "random" || kind == "random_per_read") {
    g.kind_ = kind == "random" ? Kind::Random : Kind::RandomPerRead;
    g.min_ = number(j, "min");
    g.max_ = number(j, "max");
  } else {
    throw ConfigError("unknown generator kind '" + kind + "'");
  }
  if (g.kind_ != Kind::Constant && g.max_ < g.min_) throw ConfigError("generator max below min");
  return g;
}

nlohmann::json Generator::to_json() const {
  switch (kind_) {
    case Kind::Constant:
      return {{"kind", "constant"}, {"value", value_}};
    case Kind::Sine:
      return {{"kind", "sine"}, {"min", min_}, {"max", max_}, {"periodMs", period_ms_}};
    case Kind::Overheat:
      return {{"kind", "overheat"}, {"min", min_},           {"max", max_},         {"periodMs", period_ms_},
              {"startMs", start_ms_}, {"ratePerSec", rate_per_sec_}, {"limit", limit_}};
    case Kind::Random:
      return {{"kind", "random"}, {"min", min_}, {"max", max_}};
    case Kind::RandomPerRead:
      return {{"kind", "random_per_read"}, {"min", min_}, {"max", max_}};
  }
  return {};
}

double Generator::at_tick(std::uint64_t seed, std::uint64_t salt, std::int64_t tick, std::int64_t tick_ms) const {
  const double t_ms = static_cast<double>(tick) * static_cast<double>(tick_ms);
  const auto sine = [&] {
    // Seed picks the phase so differently seeded sims are decorrelated.
    const double phase = unit_interval(mix64(seed ^ mix64(salt))) * 2.0 * std::numbers::pi;
    const double mid = 0.5 * (min_ + max_);
    const double amp = 0.5 * (max_ - min_);
    return mid + amp * std::sin(2.0 * std::numbers::pi * t_ms / period_ms_ + phase);
  };
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::Sine:
      return sine();
    case Kind::Overheat: {
      const double base = sine();
      if (t_ms < start_ms_) return base;
      return std::min(limit_, base + rate_per_sec_ * (t_ms - start_ms_) / 1000.0);
    }
    case Kind::Random:
      return min_ + (max_ - min_) * unit_interval(mix64(seed ^ mix64(salt ^ mix64(static_cast<std::uint64_t>(tick)))));
    case Kind::RandomPerRead:
      return per_read(seed, salt, static_cast<std::uint64_t>(tick));
  }
  return value_;
}

double Generator::per_read(std::uint64_t seed, std::uint64_t salt, std::uint64_t draw) const {
  return min_ + (max_ - min_) * unit_interval(mix64(seed ^ mix64(salt ^ mix64(draw + 0x5851F42D4C957F2DULL))));
}

}  // namespace sigma::sim
