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

#include "sigma/bench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sigma/core/errors.hpp"

namespace sigma::bench {

nlohmann::ordered_json Summary::to_json() const {
  return {{"count", count}, {"min", min},       {"max", max}, {"mean", mean},
          {"stddev", stddev}, {"p50", p50}, {"p99", p99}};
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ConfigError("percentile of an empty set");
  const auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw ConfigError("cannot summarize an empty sample set");
  std::sort(values.begin(), values.end());
  Summary s;
  s.count = values.size();
  s.min = values.front();
  s.max = values.back();
  double sum = 0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double sq = 0;
    for (const double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.count - 1));
  }
  s.p50 = percentile_sorted(values, 50);
  s.p99 = percentile_sorted(values, 99);
  return s;
}

std::string histogram(const std::vector<double>& values, std::size_t bins, std::size_t width) {
  if (values.empty() || bins == 0) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double span = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  std::vector<std::size_t> counts(bins, 0);
  for (const double v : values) {
    auto b = hi > lo ? static_cast<std::size_t>((v - lo) / span) : 0;
    counts[std::min(b, bins - 1)]++;
  }
  const std::size_t peak = *std::max_element(counts.begin(), counts.end());
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  for (std::size_t b = 0; b < bins; ++b) {
    const double from = lo + span * static_cast<double>(b);
    const std::size_t bar = peak ? counts[b] * width / peak : 0;
    out << "[" << from << ", " << (b + 1 == bins ? hi : from + span) << (b + 1 == bins ? "]" : ")") << " "
        << std::string(bar, '#') << " " << counts[b] << "\n";
  }
  return out.str();
}

ReportFiles emit_report(const SampleTable& table, const std::filesystem::path& prefix) {
  if (table.rows.empty()) throw ConfigError("cannot emit a report without samples");
  const auto metric = std::find(table.columns.begin(), table.columns.end(), table.metric);
  if (metric == table.columns.end()) throw ConfigError("metric column '" + table.metric + "' not in table");
  const auto col = static_cast<std::size_t>(metric - table.columns.begin());

  ReportFiles files{prefix.string() + ".csv", prefix.string() + ".summary.json", prefix.string() + ".histogram.txt"};
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());

  const auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(files.csv);
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
  }
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (const auto& row : table.rows) values.push_back(std::stod(row.at(col)));
  {
    auto out = open(files.summary);
    nlohmann::ordered_json j = summarize(values).to_json();
    j["metric"] = table.metric;
    j["unit"] = table.unit;
    out << j.dump(2) << "\n";
  }
  {
    auto out = open(files.histogram);
    out << table.metric << " (" << table.unit << "), " << values.size() << " samples\n" << histogram(values);
  }
  return files;
}

SampleTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  const auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  SampleTable t;
  std::string line;
  if (std::getline(in, line)) t.columns = split(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split(line));
  }
  return t;
}

}  // namespace sigma::bench
