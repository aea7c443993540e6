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

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "wattbed/attribution/attribution.hpp"
#include "wattbed/common/rng.hpp"
#include "wattbed/sim/calibration.hpp"
#include "wattbed/sim/model.hpp"

using namespace wattbed;
using namespace wattbed::attribution;

namespace {

CounterWindow window_of(double delta_j, double duration_s) {
  CounterWindow w;
  w.window_start_ms = 0;
  w.window_end_ms = static_cast<std::int64_t>(duration_s * 1000.0);
  w.package_energy_delta_j = delta_j;
  return w;
}

double total_power(const std::vector<ProcessPower>& procs) {
  double sum = 0.0;
  for (const auto& p : procs) {
    sum += p.power_w;
  }
  return sum;
}

}  // namespace

TEST_CASE("host power is energy delta over duration plus the idle floor") {
  CHECK(estimate_host_power(window_of(1000.0, 10.0), 0.0) == 100.0);
  CHECK(estimate_host_power(window_of(0.0, 10.0), 40.0) == 40.0);
  CHECK_THROWS_AS(estimate_host_power(window_of(10.0, 0.0), 0.0),
                  ZeroDurationWindow);
}

TEST_CASE("dynamic power splits proportionally to cpu time") {
  ProcessActivity a;
  a.pid = 1;
  a.cpu_time_delta_s = 3.0;
  ProcessActivity b;
  b.pid = 2;
  b.cpu_time_delta_s = 1.0;

  const auto procs = attribute_processes(200.0, 100.0, {a, b}, GpuSample{});
  REQUIRE(procs.size() == 3);  // two processes plus the system residual
  CHECK(procs[0].cpu_w == 75.0);
  CHECK(procs[1].cpu_w == 25.0);
  CHECK(procs[2].pid == kSystemPid);
  CHECK(procs[2].power_w == 100.0);
  CHECK_THAT(total_power(procs), Catch::Matchers::WithinRel(200.0, 1e-12));
}

TEST_CASE("every process power is its cpu plus gpu breakdown") {
  ProcessActivity a;
  a.pid = 1;
  a.cpu_time_delta_s = 2.0;
  a.gpu_util_share = 0.5;
  GpuSample gpu;
  gpu.gpu_power_w = 30.0;
  gpu.gpu_util = 0.6;

  const auto procs = attribute_processes(150.0, 100.0, {a}, gpu);
  for (const auto& p : procs) {
    CHECK(p.power_w == p.cpu_w + p.gpu_w);
  }
  CHECK(procs[0].gpu_w == 15.0);
}

TEST_CASE("attribution conserves host power over random inputs") {
  Rng rng(424242);
  for (int trial = 0; trial < 10000; ++trial) {
    const double idle = rng.uniform(1.0, 120.0);
    const double host = idle + rng.uniform(0.0, 200.0);
    const int n = static_cast<int>(rng.next_below(6));
    std::vector<ProcessActivity> acts;
    double share_left = 1.0;
    for (int i = 0; i < n; ++i) {
      ProcessActivity p;
      p.pid = i + 1;
      if (rng.bernoulli(0.5)) {
        p.container_id = "pod-" + std::to_string(i % 2);
      }
      p.cpu_time_delta_s = rng.bernoulli(0.1) ? 0.0 : rng.uniform(0.0, 30.0);
      p.gpu_util_share = rng.uniform(0.0, share_left);
      share_left -= p.gpu_util_share;
      acts.push_back(p);
    }
    GpuSample gpu;
    gpu.gpu_power_w = rng.uniform(0.0, std::max(1.0, idle * 0.3));
    gpu.gpu_util = rng.uniform(0.0, 1.0);

    const auto procs = attribute_processes(host, idle, acts, gpu);
    const double sum = total_power(procs);
    REQUIRE(std::abs(sum - host) <= 1e-9 * std::max(1.0, host));

    // Containers plus host-other re-sum to the same total.
    const auto pods = aggregate_containers(procs, {});
    double pod_sum = 0.0;
    for (const auto& c : pods) {
      pod_sum += c.power_w;
    }
    REQUIRE(std::abs(pod_sum - sum) <= 1e-9 * std::max(1.0, sum));
  }
}

TEST_CASE("scaling all cpu deltas by a common factor changes nothing") {
  std::vector<ProcessActivity> acts(3);
  acts[0] = {1, std::nullopt, 1.5, 0.0};
  acts[1] = {2, std::nullopt, 4.5, 0.0};
  acts[2] = {3, std::nullopt, 0.75, 0.0};

  const auto base = attribute_processes(180.0, 80.0, acts, GpuSample{});
  for (double k : {2.0, 10.0, 0.001}) {
    auto scaled = acts;
    for (auto& a : scaled) {
      a.cpu_time_delta_s *= k;
    }
    const auto out = attribute_processes(180.0, 80.0, scaled, GpuSample{});
    REQUIRE(out.size() == base.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK_THAT(out[i].cpu_w,
                 Catch::Matchers::WithinAbs(base[i].cpu_w, 1e-9));
    }
  }
}

TEST_CASE("a zero-activity process receives exactly its gpu share") {
  ProcessActivity busy;
  busy.pid = 1;
  busy.cpu_time_delta_s = 5.0;
  ProcessActivity idle_proc;
  idle_proc.pid = 2;
  idle_proc.cpu_time_delta_s = 0.0;
  idle_proc.gpu_util_share = 0.25;
  GpuSample gpu;
  gpu.gpu_power_w = 40.0;

  const auto procs = attribute_processes(160.0, 60.0, {busy, idle_proc}, gpu);
  CHECK(procs[1].cpu_w == 0.0);
  CHECK(procs[1].power_w == 10.0);

  // With no GPU use either, the idle process gets exactly zero.
  idle_proc.gpu_util_share = 0.0;
  const auto dry = attribute_processes(160.0, 60.0, {busy, idle_proc},
                                       GpuSample{});
  CHECK(dry[1].power_w == 0.0);
}

TEST_CASE("containers sum their member processes") {
  ProcessPower a;
  a.pid = 10;
  a.container_id = "renderer";
  a.power_w = 40.0;
  a.cpu_w = 40.0;
  ProcessPower b;
  b.pid = 11;
  b.container_id = "renderer";
  b.power_w = 24.49;
  b.cpu_w = 24.49;

  const auto pods = aggregate_containers({a, b}, {});
  REQUIRE(pods.size() == 1);
  CHECK(pods[0].container_id == "renderer");
  CHECK_THAT(pods[0].power_w, Catch::Matchers::WithinAbs(64.49, 1e-12));
}

TEST_CASE("aggregation of nothing is nothing") {
  CHECK(aggregate_containers({}, {}).empty());
}

TEST_CASE("unmapped processes fold into host-other, explicit mapping wins") {
  ProcessPower mapped;
  mapped.pid = 1;
  mapped.power_w = 12.0;
  ProcessPower inline_pod;
  inline_pod.pid = 2;
  inline_pod.container_id = "renderer";
  inline_pod.power_w = 20.0;
  ProcessPower loose;
  loose.pid = 3;
  loose.power_w = 5.0;

  const auto pods = aggregate_containers({mapped, inline_pod, loose},
                                         {{1, "renderer"}});
  REQUIRE(pods.size() == 2);
  std::map<std::string, double> by_name;
  for (const auto& c : pods) {
    by_name[c.container_id] = c.power_w;
  }
  CHECK(by_name.at("renderer") == 32.0);
  CHECK(by_name.at(kHostOtherContainer) == 5.0);
}

TEST_CASE("invalid attribution inputs raise typed errors") {
  CHECK_THROWS_AS(attribute_processes(50.0, 100.0, {}, GpuSample{}),
                  AttributionError);

  ProcessActivity over;
  over.pid = 1;
  over.cpu_time_delta_s = 1.0;
  over.gpu_util_share = 0.7;
  ProcessActivity more;
  more.pid = 2;
  more.cpu_time_delta_s = 1.0;
  more.gpu_util_share = 0.5;
  CHECK_THROWS_AS(attribute_processes(200.0, 100.0, {over, more}, GpuSample{}),
                  ShareOverflow);

  ProcessActivity neg;
  neg.pid = 1;
  neg.cpu_time_delta_s = -1.0;
  CHECK_THROWS_AS(attribute_processes(200.0, 100.0, {neg}, GpuSample{}),
                  AttributionError);
}

TEST_CASE("calibrated streaming windows land the renderer pod near its table value") {
  const auto cal = sim::CalibrationTable::builtin();
  sim::ScenarioConfig cfg;
  cfg.campaign = sim::Campaign::kComparison;
  cfg.scenario = sim::Scenario::k1ActiveUE;
  cfg.bitrate_mbps = 10.0;
  cfg.duration_s = 300.0;
  const sim::SimModel model(cfg, cal, false);

  double pod_sum = 0.0;
  double host_sum = 0.0;
  double hw_sum = 0.0;
  for (int k = 0; k < model.tick_count(); ++k) {
    const auto out = model.step(k);
    const double host_w =
        estimate_host_power(out.window, cal.sw.counter_floor_w);
    const auto procs = attribute_processes(
        host_w, cal.sw.attribution_baseline_w, out.processes, out.gpu);
    for (const auto& pod : aggregate_containers(procs, {})) {
      if (pod.container_id == cal.sw.renderer_container) {
        pod_sum += pod.power_w;
      }
    }
    host_sum += host_w;
    hw_sum += out.true_power_w.at("edge");
  }
  const double n = model.tick_count();
  CHECK_THAT(pod_sum / n, Catch::Matchers::WithinRel(64.49, 0.02));

  // Windowed means keep the three measurement levels ordered.
  CHECK(pod_sum / n <= host_sum / n);
  CHECK(host_sum / n <= hw_sum / n);
}
