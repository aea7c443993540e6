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
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wattbed::collector {

// ============================================================================
// Errors
// ============================================================================

class SeriesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SampleBeforeEpoch : public SeriesError {
 public:
  using SeriesError::SeriesError;
};

class WindowOutsideSeries : public SeriesError {
 public:
  using SeriesError::SeriesError;
};

// ============================================================================
// Types
// ============================================================================

/// Measurement source identifiers. Container sources carry their name after
/// the prefix, e.g. "container:renderer".
inline constexpr const char* kSourceHardware = "hardware";
inline constexpr const char* kSourceHost = "host";
inline constexpr const char* kContainerPrefix = "container:";

inline std::string container_source(const std::string& name) {
  return std::string(kContainerPrefix) + name;
}

inline bool is_valid_source(const std::string& source) {
  return source == kSourceHardware || source == kSourceHost ||
         (source.rfind(kContainerPrefix, 0) == 0 &&
          source.size() > std::string(kContainerPrefix).size());
}

/// One absolute-time power reading before alignment.
struct RawSample {
  std::int64_t timestamp_ms = 0;
  double power_w = 0.0;

  bool operator==(const RawSample&) const = default;
};

struct SeriesPoint {
  double t_rel_s = 0.0;
  double power_w = 0.0;

  bool operator==(const SeriesPoint&) const = default;
};

/// Relative-time power series for one (node, source) pair. After alignment
/// t_rel is strictly increasing and power is non-negative.
struct PowerSeries {
  std::string node_id;
  std::string source;
  std::vector<SeriesPoint> samples;

  bool operator==(const PowerSeries&) const = default;

  void validate() const {
    if (!is_valid_source(source)) {
      throw SeriesError("invalid source: " + source);
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].power_w < 0.0) {
        throw SeriesError("negative power in series " + node_id + "/" +
                          source);
      }
      if (i > 0 && samples[i].t_rel_s <= samples[i - 1].t_rel_s) {
        throw SeriesError("t_rel not strictly increasing in series " +
                          node_id + "/" + source);
      }
    }
  }

  double duration_s() const {
    return samples.empty() ? 0.0
                           : samples.back().t_rel_s - samples.front().t_rel_s;
  }
};

// ============================================================================
// Alignment
// ============================================================================

/// Converts absolute timestamps into seconds since the experiment epoch `t0`.
/// Input order is irrelevant: the result is sorted ascending, duplicate
/// timestamps collapse keeping the last-seen value. Any sample before t0
/// throws SampleBeforeEpoch.
inline PowerSeries align_relative(const std::string& node_id,
                                  const std::string& source,
                                  std::vector<RawSample> raw,
                                  std::int64_t t0_ms) {
  for (const auto& s : raw) {
    if (s.timestamp_ms < t0_ms) {
      throw SampleBeforeEpoch("sample at " + std::to_string(s.timestamp_ms) +
                              " precedes epoch " + std::to_string(t0_ms));
    }
  }
  // Stable sort keeps arrival order among equal timestamps so "last value
  // wins" is well defined.
  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawSample& a, const RawSample& b) {
                     return a.timestamp_ms < b.timestamp_ms;
                   });
  PowerSeries out;
  out.node_id = node_id;
  out.source = source;
  out.samples.reserve(raw.size());
  for (const auto& s : raw) {
    const double t_rel = static_cast<double>(s.timestamp_ms - t0_ms) / 1000.0;
    if (!out.samples.empty() && out.samples.back().t_rel_s == t_rel) {
      out.samples.back().power_w = s.power_w;
    } else {
      out.samples.push_back({t_rel, s.power_w});
    }
  }
  return out;
}

/// Shifts a series so its first sample sits at t_rel = 0. Identity when it
/// already does.
inline PowerSeries rebase_to_zero(PowerSeries series) {
  if (!series.samples.empty()) {
    const double t0 = series.samples.front().t_rel_s;
    if (t0 != 0.0) {
      for (auto& p : series.samples) {
        p.t_rel_s -= t0;
      }
    }
  }
  return series;
}

// ============================================================================
// Energy integration
// ============================================================================

namespace detail {

/// Linear interpolation of power at time t between enclosing samples.
/// Caller guarantees the series covers t.
inline double power_at(const PowerSeries& s, double t) {
  const auto& v = s.samples;
  auto it = std::lower_bound(
      v.begin(), v.end(), t,
      [](const SeriesPoint& p, double x) { return p.t_rel_s < x; });
  if (it == v.end()) {
    return v.back().power_w;
  }
  if (it->t_rel_s == t || it == v.begin()) {
    return it->power_w;
  }
  const auto prev = std::prev(it);
  const double span = it->t_rel_s - prev->t_rel_s;
  const double w = (t - prev->t_rel_s) / span;
  return prev->power_w + w * (it->power_w - prev->power_w);
}

}  // namespace detail

/// Trapezoidal integral of power over [from, to], in joules. The window must
/// lie inside the sampled span; edge segments are interpolated linearly.
inline double integrate_energy(const PowerSeries& series, double from_s,
                               double to_s) {
  if (!(from_s < to_s)) {
    throw WindowOutsideSeries("integration window is empty or inverted");
  }
  if (series.samples.size() < 2 || series.samples.front().t_rel_s > from_s ||
      series.samples.back().t_rel_s < to_s) {
    throw WindowOutsideSeries("series does not cover [" +
                              std::to_string(from_s) + ", " +
                              std::to_string(to_s) + "]");
  }
  const auto& v = series.samples;
  double joules = 0.0;
  double t_prev = from_s;
  double p_prev = detail::power_at(series, from_s);
  auto it = std::upper_bound(
      v.begin(), v.end(), from_s,
      [](double x, const SeriesPoint& p) { return x < p.t_rel_s; });
  for (; it != v.end() && it->t_rel_s < to_s; ++it) {
    joules += (p_prev + it->power_w) / 2.0 * (it->t_rel_s - t_prev);
    t_prev = it->t_rel_s;
    p_prev = it->power_w;
  }
  const double p_end = detail::power_at(series, to_s);
  joules += (p_prev + p_end) / 2.0 * (to_s - t_prev);
  return joules;
}

}  // namespace wattbed::collector
