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

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sigma::bench {

struct Summary {
  std::size_t count = 0;
  double min = 0;
  double max = 0;
  double mean = 0;
  double stddev = 0;  ///< sample standard deviation (n - 1); 0 for a single sample
  double p50 = 0;     ///< nearest-rank percentiles
  double p99 = 0;

  nlohmann::ordered_json to_json() const;
};

/// Throws ConfigError for an empty set.
Summary summarize(std::vector<double> values);
/// Nearest-rank percentile of sorted values, q in (0, 100].
double percentile_sorted(const std::vector<double>& sorted, double q);

/// Tabular samples: fixed column order, one row per sample.
struct SampleTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  /// Column summarized in the JSON and the histogram.
  std::string metric;
  std::string unit;
};

/// Text histogram with `bins` equal-width bins over [min, max].
std::string histogram(const std::vector<double>& values, std::size_t bins = 20, std::size_t width = 50);

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::filesystem::path histogram;
};

/// Writes <prefix>.csv, <prefix>.summary.json and <prefix>.histogram.txt.
/// Throws ConfigError for an empty table and IoError on write failures.
ReportFiles emit_report(const SampleTable& table, const std::filesystem::path& prefix);

/// Parses a CSV written by emit_report (no quoting is ever needed).
SampleTable read_csv(const std::filesystem::path& file);

}  // namespace sigma::bench
