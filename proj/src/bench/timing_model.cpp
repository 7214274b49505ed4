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

#include "sigma/bench/timing_model.hpp"

#include <queue>
#include <string>
#include <vector>

#include "sigma/core/errors.hpp"

namespace sigma::bench {

void TimingModel::validate() const {
  if (period <= 0) throw ConfigError("timing model: T must be positive");
  if (transmission < 0 || transmission >= period) throw ConfigError("timing model: t_t must satisfy 0 <= t_t < T");
  if (phase < 0 || phase >= period) throw ConfigError("timing model: t_s must satisfy 0 <= t_s < T");
}

namespace {

enum class EventKind {
  DeviceSampled,   // insecure request reaches the device
  StoreWritten,    // insecure response written to the store
  StoreRead,       // secure request reaches the store
  ClientReceived,  // secure response reaches the client
};

struct Event {
  Nanos at = 0;
  EventKind kind = EventKind::DeviceSampled;
  std::int64_t version = 0;  // value version carried by the event
  bool operator>(const Event& o) const {
    // Writes before reads at the same instant: a value that lands exactly
    // when a secure request arrives is visible to it.
    return at != o.at ? at > o.at : static_cast<int>(kind) > static_cast<int>(o.kind);
  }
};

}  // namespace

ForwardingResult forwarding_delay_sim(const TimingModel& m) {
  m.validate();
  constexpr std::int64_t kTracked = 1;  // value sampled by insecure poll 1
  constexpr int kPolls = 6;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  for (int k = 0; k < kPolls; ++k) {
    events.push({k * m.period + m.transmission, EventKind::DeviceSampled, k});
    events.push({m.phase + k * m.period + m.transmission, EventKind::StoreRead, 0});
  }

  std::int64_t store_version = -1;
  Nanos stored_at = -1;
  Nanos sampled_prev = -1;
  while (!events.empty()) {
    const Event e = events.top();
    events.pop();
    switch (e.kind) {
      case EventKind::DeviceSampled:
        if (e.version == kTracked - 1) sampled_prev = e.at;
        events.push({e.at + m.transmission, EventKind::StoreWritten, e.version});
        break;
      case EventKind::StoreWritten:
        store_version = e.version;
        if (e.version == kTracked) stored_at = e.at;
        break;
      case EventKind::StoreRead:
        events.push({e.at + m.transmission, EventKind::ClientReceived, store_version});
        break;
      case EventKind::ClientReceived:
        if (e.version == kTracked) {
          ForwardingResult r;
          r.stored_at = stored_at;
          r.delivered_at = e.at;
          r.forwarding_delay = e.at - stored_at;
          r.worst_data_age = e.at - sampled_prev;
          return r;
        }
        break;
    }
  }
  throw ConfigError("timing model: tracked value never reached the client");
}

DataAgeBounds data_age_bounds(Nanos period, Nanos transmission) {
  if (period <= 0) throw ConfigError("data age: T must be positive");
  if (transmission < 0) throw ConfigError("data age: t_t must not be negative");
  return {2 * transmission + period, 2 * (transmission + period), transmission + period};
}

}  // namespace sigma::bench
