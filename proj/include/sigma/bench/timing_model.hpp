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
 * @file timing_model.hpp
 * @brief Two cascaded pollers: forwarding delay and data age.
 *
 * The insecure worker polls the device at k·T; each poll takes a round trip
 * of 2·t_t, so a value lands in the store at k·T + 2·t_t. The secure client
 * polls the bridge at t_s + k·T and its request reaches the store t_t later.
 * The forwarding delay t_d is the time from a value landing in the store to
 * its arrival at the secure client. All times are integer nanoseconds so
 * the half-open interval bounds can be checked exactly.
 */

#include <cstdint>

namespace sigma::bench {

using Nanos = std::int64_t;

struct TimingModel {
  Nanos period = 0;        ///< T, shared by both pollers
  Nanos transmission = 0;  ///< t_t, one way
  Nanos phase = 0;         ///< t_s in [0, T)

  /// Throws ConfigError unless T > 0, 0 <= t_t < T and 0 <= t_s < T.
  void validate() const;
};

struct ForwardingResult {
  Nanos forwarding_delay = 0;  ///< t_d
  Nanos stored_at = 0;         ///< value landed in the store
  Nanos delivered_at = 0;      ///< value reached the secure client
  /// Age at delivery of a value created just after the previous device
  /// sample, i.e. the oldest value the chain can hand over.
  Nanos worst_data_age = 0;
};

/// Event-driven run of both pollers over the first few periods, following
/// the value picked up by insecure poll 1. Throws ConfigError on invalid models.
ForwardingResult forwarding_delay_sim(const TimingModel& model);

struct DataAgeBounds {
  Nanos best = 0;    ///< 2·t_t + T
  Nanos worst = 0;   ///< 2·(t_t + T)
  Nanos direct = 0;  ///< t_t + T, a client polling the device itself
};

/// Throws ConfigError when T <= 0 or t_t < 0.
DataAgeBounds data_age_bounds(Nanos period, Nanos transmission);

}  // namespace sigma::bench
