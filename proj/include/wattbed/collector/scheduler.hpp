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

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wattbed/common/log.hpp"
#include "wattbed/common/time.hpp"

namespace wattbed::collector {

enum class TargetKind { kMeter, kTelemetry };

/// One scrape target. `scrape` runs at each due tick with the scheduled
/// timestamp; it throws to signal failure. Failures are counted and retried
/// at the next tick, never propagated, so one bad target cannot stall the
/// rest.
struct ScrapeTarget {
  std::string name;
  TargetKind kind = TargetKind::kMeter;
  double interval_s = 1.0;
  std::function<void(std::int64_t scheduled_ms)> scrape;
};

struct TargetStatus {
  std::int64_t scrapes = 0;   // attempts
  std::int64_t failures = 0;  // attempts that threw
  bool degraded() const { return failures > 0 && failures == scrapes; }
};

/// Interval scheduler over a pluggable clock. With a manual clock, time
/// advances exactly to each due tick, so a simulated run executes as fast as
/// the scrape bodies allow; with the system clock it paces in real time and
/// per-target jitter stays well under a tenth of the interval.
class ScrapeScheduler {
 public:
  ScrapeScheduler(Clock& clock, std::vector<ScrapeTarget> targets)
      : clock_(clock), targets_(std::move(targets)) {
    for (const auto& t : targets_) {
      if (!(t.interval_s > 0.0)) {
        throw std::invalid_argument("scrape interval must be > 0 for " +
                                    t.name);
      }
      if (!t.scrape) {
        throw std::invalid_argument("scrape callback missing for " + t.name);
      }
    }
  }

  /// Fires every target due in [start, end). The first tick of each target is
  /// at `start_ms`. Returns when the next due time reaches `end_ms` or stop()
  /// was requested.
  void run(std::int64_t start_ms, std::int64_t end_ms) {
    std::vector<std::int64_t> next(targets_.size(), start_ms);
    stop_.store(false, std::memory_order_relaxed);
    while (!stop_.load(std::memory_order_relaxed)) {
      std::int64_t due = INT64_MAX;
      for (const auto t : next) {
        due = t < due ? t : due;
      }
      if (due >= end_ms) {
        break;
      }
      clock_.sleep_until_ms(due);
      for (std::size_t i = 0; i < targets_.size(); ++i) {
        if (next[i] != due) {
          continue;
        }
        fire(i, due);
        next[i] = due + static_cast<std::int64_t>(
                            targets_[i].interval_s * 1000.0 + 0.5);
      }
    }
  }

  void stop() { stop_.store(true, std::memory_order_relaxed); }

  const std::map<std::string, TargetStatus>& status() const { return status_; }

 private:
  void fire(std::size_t i, std::int64_t scheduled_ms) {
    TargetStatus& st = status_[targets_[i].name];
    ++st.scrapes;
    try {
      targets_[i].scrape(scheduled_ms);
    } catch (const std::exception& e) {
      ++st.failures;
      log_warn("scrape failed", {{"target", targets_[i].name},
                                         {"error", e.what()}});
    }
  }

  Clock& clock_;
  std::vector<ScrapeTarget> targets_;
  std::map<std::string, TargetStatus> status_;
  std::atomic<bool> stop_{false};
};

}  // namespace wattbed::collector
