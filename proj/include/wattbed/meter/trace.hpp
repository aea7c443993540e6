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

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

namespace wattbed::meter {

/// Supplies the instantaneous per-channel load the mock meter reports.
/// `std::nullopt` means the trace has nothing for that channel at that time
/// (exhausted or never started); the meter then reports the channel off.
/// Implementations must be safe to query from the HTTP serving thread.
class PowerTraceSource {
 public:
  virtual ~PowerTraceSource() = default;

  /// Active power in watts for `channel_name` at absolute `timestamp_ms`.
  virtual std::optional<double> load_at(const std::string& channel_name,
                                        std::int64_t timestamp_ms) = 0;
};

/// Fixed load per channel; unknown channels read as exhausted.
class ConstantTrace : public PowerTraceSource {
 public:
  explicit ConstantTrace(std::map<std::string, double> loads)
      : loads_(std::move(loads)) {}

  std::optional<double> load_at(const std::string& channel_name,
                                std::int64_t) override {
    const auto it = loads_.find(channel_name);
    if (it == loads_.end()) {
      return std::nullopt;
    }
    return it->second;
  }

 private:
  std::map<std::string, double> loads_;
};

/// Thread-safe mutable trace: the driving loop publishes each tick's loads,
/// the meter thread reads whatever was published last. Reads before the first
/// publish report exhaustion, so publish once before opening for polling.
class SharedTrace : public PowerTraceSource {
 public:
  void publish(const std::string& channel_name, double load_w) {
    std::lock_guard<std::mutex> lock(mu_);
    latest_[channel_name] = load_w;
  }

  std::optional<double> load_at(const std::string& channel_name,
                                std::int64_t) override {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = latest_.find(channel_name);
    if (it == latest_.end()) {
      return std::nullopt;
    }
    return it->second;
  }

 private:
  std::mutex mu_;
  std::map<std::string, double> latest_;
};

/// Piecewise-constant trace from (timestamp, load) breakpoints per channel.
/// Queries before the first breakpoint or at/after a channel's end mark are
/// exhausted; between breakpoints the most recent value holds.
class StepTrace : public PowerTraceSource {
 public:
  void add_point(const std::string& channel_name, std::int64_t timestamp_ms,
                 double load_w) {
    points_[channel_name][timestamp_ms] = load_w;
  }

  void set_end(const std::string& channel_name, std::int64_t end_ms) {
    ends_[channel_name] = end_ms;
  }

  std::optional<double> load_at(const std::string& channel_name,
                                std::int64_t timestamp_ms) override {
    const auto end = ends_.find(channel_name);
    if (end != ends_.end() && timestamp_ms >= end->second) {
      return std::nullopt;
    }
    const auto ch = points_.find(channel_name);
    if (ch == points_.end() || ch->second.empty()) {
      return std::nullopt;
    }
    auto it = ch->second.upper_bound(timestamp_ms);
    if (it == ch->second.begin()) {
      return std::nullopt;
    }
    return std::prev(it)->second;
  }

 private:
  std::map<std::string, std::map<std::int64_t, double>> points_;
  std::map<std::string, std::int64_t> ends_;
};

/// Cuts any trace off after a deadline, reporting exhaustion past it.
class TimeLimitedTrace : public PowerTraceSource {
 public:
  TimeLimitedTrace(std::shared_ptr<PowerTraceSource> inner,
                   std::int64_t end_ms)
      : inner_(std::move(inner)), end_ms_(end_ms) {}

  std::optional<double> load_at(const std::string& channel_name,
                                std::int64_t timestamp_ms) override {
    if (timestamp_ms >= end_ms_) {
      return std::nullopt;
    }
    return inner_->load_at(channel_name, timestamp_ms);
  }

 private:
  std::shared_ptr<PowerTraceSource> inner_;
  std::int64_t end_ms_;
};

}  // namespace wattbed::meter
