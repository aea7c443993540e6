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
//
// Software-side power estimation: host watts from counter windows, host watts
// split across processes by activity share, processes folded into containers.
// All functions are pure; conservation (attributed power sums to host watts)
// is the contract everything downstream leans on.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wattbed::attribution {

// ============================================================================
// Errors
// ============================================================================

class AttributionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroDurationWindow : public AttributionError {
 public:
  using AttributionError::AttributionError;
};

class ShareOverflow : public AttributionError {
 public:
  using AttributionError::AttributionError;
};

// ============================================================================
// Types
// ============================================================================

/// One sampling window of the host's cumulative energy counter plus busy time
/// per logical CPU.
struct CounterWindow {
  std::int64_t window_start_ms = 0;
  std::int64_t window_end_ms = 0;
  double package_energy_delta_j = 0.0;   // >= 0
  std::vector<double> per_cpu_busy_s;    // busy seconds per CPU in the window
};

/// Per-process activity inside one window.
struct ProcessActivity {
  int pid = 0;
  std::optional<std::string> container_id;
  double cpu_time_delta_s = 0.0;  // >= 0
  double gpu_util_share = 0.0;    // [0,1]; shares over all processes sum <= 1
};

/// GPU telemetry point. Temperature is deliberately absent; it is ingested
/// upstream but never consumed.
struct GpuSample {
  std::int64_t timestamp_ms = 0;
  double gpu_power_w = 0.0;  // >= 0
  double gpu_util = 0.0;     // [0,1]
};

/// Attributed power with its cpu/gpu breakdown. power_w == cpu_w + gpu_w.
struct ProcessPower {
  int pid = 0;  // kSystemPid for the synthetic residual entry
  std::optional<std::string> container_id;
  double power_w = 0.0;
  double cpu_w = 0.0;
  double gpu_w = 0.0;
};

struct ContainerPower {
  std::string container_id;  // "host-other" collects unmapped processes
  double power_w = 0.0;
  double cpu_w = 0.0;
  double gpu_w = 0.0;
};

/// Pid of the synthetic entry holding host idle power, any unclaimed dynamic
/// power, and unclaimed GPU power.
inline constexpr int kSystemPid = -1;

inline constexpr const char* kHostOtherContainer = "host-other";

// ============================================================================
// Operations
// ============================================================================

/// Host watts over the window: counter joules per second plus `idle_floor_w`
/// covering board components the package counter cannot see.
inline double estimate_host_power(const CounterWindow& w,
                                  double idle_floor_w) {
  if (w.window_end_ms <= w.window_start_ms) {
    throw ZeroDurationWindow("counter window has non-positive duration");
  }
  if (w.package_energy_delta_j < 0.0) {
    throw AttributionError("package energy delta is negative");
  }
  const double duration_s =
      static_cast<double>(w.window_end_ms - w.window_start_ms) / 1000.0;
  return w.package_energy_delta_j / duration_s + idle_floor_w;
}

/// Splits host power across processes: dynamic power (host - idle) by CPU-time
/// share, GPU power by utilization share. A synthetic system entry absorbs
/// host idle, unclaimed dynamic power (when no process was busy), and the
/// GPU's unattributed remainder, so the result always sums to `host_watts`.
inline std::vector<ProcessPower> attribute_processes(
    double host_watts, double host_idle_w,
    const std::vector<ProcessActivity>& acts, const GpuSample& gpu) {
  if (host_watts < host_idle_w) {
    throw AttributionError("host power below its idle floor");
  }
  double total_cpu_s = 0.0;
  double total_gpu_share = 0.0;
  for (const auto& a : acts) {
    if (a.cpu_time_delta_s < 0.0) {
      throw AttributionError("negative cpu time delta for pid " +
                             std::to_string(a.pid));
    }
    if (a.gpu_util_share < 0.0 || a.gpu_util_share > 1.0) {
      throw ShareOverflow("gpu share out of [0,1] for pid " +
                          std::to_string(a.pid));
    }
    total_cpu_s += a.cpu_time_delta_s;
    total_gpu_share += a.gpu_util_share;
  }
  if (total_gpu_share > 1.0 + 1e-12) {
    throw ShareOverflow("gpu shares sum to " + std::to_string(total_gpu_share));
  }

  const double dynamic_w = host_watts - host_idle_w;
  std::vector<ProcessPower> out;
  out.reserve(acts.size() + 1);
  double claimed = 0.0;
  for (const auto& a : acts) {
    ProcessPower p;
    p.pid = a.pid;
    p.container_id = a.container_id;
    p.cpu_w =
        total_cpu_s > 0.0 ? dynamic_w * (a.cpu_time_delta_s / total_cpu_s)
                          : 0.0;
    p.gpu_w = gpu.gpu_power_w * a.gpu_util_share;
    p.power_w = p.cpu_w + p.gpu_w;
    claimed += p.power_w;
    out.push_back(std::move(p));
  }

  // The system residual balances the books: host idle, dynamic power no
  // process claimed, and the GPU's unattributed remainder all land here
  // (host_watts already contains the GPU draw, so no separate gpu term).
  double residual = host_watts - claimed;
  if (residual < 0.0) {
    if (residual < -1e-9 * (host_watts > 1.0 ? host_watts : 1.0)) {
      throw AttributionError(
          "attributed gpu power exceeds the host power budget");
    }
    residual = 0.0;
  }
  ProcessPower system;
  system.pid = kSystemPid;
  system.cpu_w = residual;
  system.gpu_w = 0.0;
  system.power_w = residual;
  out.push_back(std::move(system));
  return out;
}

/// Folds processes into containers; processes without a mapping (and without
/// an inline container_id) land in "host-other". Totals are preserved.
inline std::vector<ContainerPower> aggregate_containers(
    const std::vector<ProcessPower>& procs,
    const std::map<int, std::string>& mapping) {
  std::map<std::string, ContainerPower> acc;
  std::vector<std::string> order;
  const auto slot = [&](const std::string& id) -> ContainerPower& {
    auto it = acc.find(id);
    if (it == acc.end()) {
      it = acc.emplace(id, ContainerPower{id, 0.0, 0.0, 0.0}).first;
      order.push_back(id);
    }
    return it->second;
  };
  for (const auto& p : procs) {
    std::string target;
    if (const auto it = mapping.find(p.pid); it != mapping.end()) {
      target = it->second;
    } else if (p.container_id.has_value()) {
      target = *p.container_id;
    } else {
      target = kHostOtherContainer;
    }
    ContainerPower& c = slot(target);
    c.power_w += p.power_w;
    c.cpu_w += p.cpu_w;
    c.gpu_w += p.gpu_w;
  }
  std::vector<ContainerPower> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    out.push_back(acc.at(id));
  }
  return out;
}

}  // namespace wattbed::attribution
