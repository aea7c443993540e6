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
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <thread>

namespace wattbed {

/// Default experiment epoch for driven (simulated) runs.
inline constexpr std::int64_t kDefaultEpochMs = 1'700'000'000'000LL;

/// Millisecond time source. The collector and the mock meter take a Clock so
/// tests and driven pipelines can run on virtual time.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
  /// Blocks until the clock reaches `t_ms` (virtual clocks jump instead).
  virtual void sleep_until_ms(std::int64_t t_ms) = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() const override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  void sleep_until_ms(std::int64_t t_ms) override {
    const auto now = now_ms();
    if (t_ms > now) {
      std::this_thread::sleep_for(std::chrono::milliseconds(t_ms - now));
    }
  }

  static SystemClock& instance() {
    static SystemClock clock;
    return clock;
  }
};

/// Virtual clock for driven pipelines and tests. sleep_until_ms() advances the
/// clock immediately, so schedulers run at full speed with zero jitter.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}

  std::int64_t now_ms() const override { return now_.load(); }

  void sleep_until_ms(std::int64_t t_ms) override {
    std::int64_t cur = now_.load();
    while (t_ms > cur && !now_.compare_exchange_weak(cur, t_ms)) {
    }
  }

  void advance_ms(std::int64_t delta_ms) { now_.fetch_add(delta_ms); }
  void set_ms(std::int64_t t_ms) { now_.store(t_ms); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace wattbed
