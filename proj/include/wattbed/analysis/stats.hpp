// Copyright 2026 The wattbed Authors
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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wattbed/collector/series.hpp"
#include "wattbed/sim/scenario.hpp"

namespace wattbed::analysis {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyAfterTrim : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};

class ZeroBaseline : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};

inline constexpr double kDefaultWarmupS = 10.0;

/// Coverage below this marks a summary as degraded.
inline constexpr double kDegradedCoverage = 0.9;

struct SummaryStats {
  double mean_w = 0.0;
  double std_w = 0.0;  // population std over the trimmed window
  std::int64_t n = 0;
  double coverage = 1.0;  // fraction of expected samples present

  bool degraded() const { return coverage < kDegradedCoverage; }
};

/// Mean and population std of power after discarding the first `warmup_s`
/// seconds. Expected sample count for `coverage` comes from the trimmed
/// span and the series' median sampling interval; gaps lower coverage, they
/// are never interpolated.
inline SummaryStats summarize(const collector::PowerSeries& series,
                              double warmup_s = kDefaultWarmupS) {
  std::vector<const collector::SeriesPoint*> kept;
  kept.reserve(series.samples.size());
  for (const auto& p : series.samples) {
    if (p.t_rel_s >= warmup_s) {
      kept.push_back(&p);
    }
  }
  if (kept.empty()) {
    throw EmptyAfterTrim("series " + series.node_id + "/" + series.source +
                         " has no samples after a " +
                         std::to_string(warmup_s) + " s warmup trim");
  }

  double sum = 0.0;
  for (const auto* p : kept) {
    sum += p->power_w;
  }
  const double mean = sum / static_cast<double>(kept.size());
  double var = 0.0;
  for (const auto* p : kept) {
    const double d = p->power_w - mean;
    var += d * d;
  }
  var /= static_cast<double>(kept.size());

  SummaryStats out;
  out.mean_w = mean;
  out.std_w = std::sqrt(var);
  out.n = static_cast<std::int64_t>(kept.size());
  out.coverage = 1.0;
  if (kept.size() >= 2) {
    std::vector<double> deltas;
    deltas.reserve(kept.size() - 1);
    for (std::size_t i = 1; i < kept.size(); ++i) {
      deltas.push_back(kept[i]->t_rel_s - kept[i - 1]->t_rel_s);
    }
    std::nth_element(deltas.begin(), deltas.begin() + deltas.size() / 2,
                     deltas.end());
    const double interval = deltas[deltas.size() / 2];
    if (interval > 0.0) {
      const double span = kept.back()->t_rel_s - kept.front()->t_rel_s;
      const double expected = std::floor(span / interval + 0.5) + 1.0;
      out.coverage =
          std::min(1.0, static_cast<double>(kept.size()) / expected);
    }
  }
  return out;
}

/// 100 * (active - baseline) / baseline.
inline double percent_increase(double active_mean_w, double baseline_mean_w) {
  if (!(baseline_mean_w > 0.0)) {
    throw ZeroBaseline("baseline mean must be > 0");
  }
  return 100.0 * (active_mean_w - baseline_mean_w) / baseline_mean_w;
}

/// 100 * (software - hardware) / hardware; negative means the software path
/// underestimates the metered draw.
inline double underestimation(double hw_mean_w, double sw_mean_w) {
  if (!(hw_mean_w > 0.0)) {
    throw ZeroBaseline("hardware mean must be > 0");
  }
  return 100.0 * (sw_mean_w - hw_mean_w) / hw_mean_w;
}

/// 100 * part / whole.
inline double share(double part_mean_w, double whole_mean_w) {
  if (!(whole_mean_w > 0.0)) {
    throw ZeroBaseline("whole mean must be > 0");
  }
  return 100.0 * part_mean_w / whole_mean_w;
}

struct E2eTotal {
  double total_w = 0.0;
  bool partial = false;                // true when any testbed node is absent
  std::vector<std::string> missing;
};

/// Sum of per-node means. A map lacking any of the five testbed nodes yields
/// a flagged partial total, never an error.
inline E2eTotal e2e_total(const std::map<std::string, double>& node_means_w) {
  E2eTotal out;
  for (const auto& [node, w] : node_means_w) {
    out.total_w += w;
  }
  for (const char* node : sim::kNodes) {
    if (!node_means_w.contains(node)) {
      out.missing.push_back(node);
    }
  }
  out.partial = !out.missing.empty();
  return out;
}

}  // namespace wattbed::analysis
