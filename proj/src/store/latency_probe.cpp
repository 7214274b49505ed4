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

#include "sigma/store/latency_probe.hpp"

namespace sigma::store {

void LatencyProbe::record_write(const std::string& key, std::int64_t version, std::int64_t dt1_ns) {
  std::lock_guard lock(mutex_);
  pending_[key] = Pending{version, dt1_ns, false};
}

void LatencyProbe::record_read(const std::string& key, std::int64_t version, std::int64_t dt2_ns) {
  std::lock_guard lock(mutex_);
  auto it = pending_.find(key);
  if (it == pending_.end() || it->second.paired || it->second.version != version) return;
  it->second.paired = true;
  samples_.push_back({key, it->second.dt1_ns, dt2_ns, it->second.dt1_ns + dt2_ns});
}

std::vector<InternalLatencySample> LatencyProbe::samples() const {
  std::lock_guard lock(mutex_);
  return samples_;
}

std::size_t LatencyProbe::sample_count() const {
  std::lock_guard lock(mutex_);
  return samples_.size();
}

void LatencyProbe::clear() {
  std::lock_guard lock(mutex_);
  pending_.clear();
  samples_.clear();
}

}  // namespace sigma::store
