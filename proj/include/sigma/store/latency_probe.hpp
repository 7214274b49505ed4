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
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace sigma::store {

/// One value version measured on both sides of the store.
struct InternalLatencySample {
  std::string key;
  std::int64_t dt1_ns = 0;  ///< value arrival at the client → store write complete
  std::int64_t dt2_ns = 0;  ///< secure read received → value fetched from the store
  std::int64_t t_proc_ns = 0;
};

/// Pairs writer-side and reader-side timings of the same value version.
/// A version is identified by (key, source timestamp), which the polling
/// workers keep strictly increasing per key. Only the first secure read of
/// each version produces a sample.
class LatencyProbe {
 public:
  void record_write(const std::string& key, std::int64_t version, std::int64_t dt1_ns);
  void record_read(const std::string& key, std::int64_t version, std::int64_t dt2_ns);

  std::vector<InternalLatencySample> samples() const;
  std::size_t sample_count() const;
  void clear();

 private:
  struct Pending {
    std::int64_t version = 0;
    std::int64_t dt1_ns = 0;
    bool paired = false;
  };
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Pending> pending_;
  std::vector<InternalLatencySample> samples_;
};

}  // namespace sigma::store
