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
// Experiment orchestration. For every configured scenario this stands up a
// mock meter backed by the simulator, scrapes its hardware readings over
// loopback HTTP and the software telemetry in-process, and lands both in
// per-run series storage. Runs execute on a driven clock, so a 300 s
// scenario takes well under a second of wall time.

#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wattbed/analysis/report.hpp"
#include "wattbed/attribution/attribution.hpp"
#include "wattbed/collector/scheduler.hpp"
#include "wattbed/collector/series.hpp"
#include "wattbed/collector/storage.hpp"
#include "wattbed/common/log.hpp"
#include "wattbed/common/time.hpp"
#include "wattbed/meter/mock_meter.hpp"
#include "wattbed/meter/poll.hpp"
#include "wattbed/sim/calibration.hpp"
#include "wattbed/sim/model.hpp"
#include "wattbed/sim/scenario.hpp"

namespace wattbed::cli {

/// Plan or input rejected before any work started.
class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced experiment, run, or file does not exist.
class MissingDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kManifestSchema = "wattbed.manifest.v1";
inline constexpr const char* kTraceSchema = "wattbed.trace.v1";
inline constexpr const char* kBuiltinCalibrationName = "builtin";

struct ExperimentPlan {
  std::string experiment_id = "full-matrix";
  std::vector<sim::ScenarioConfig> scenarios;
  std::filesystem::path output_dir;
  std::string calibration = kBuiltinCalibrationName;
  bool allow_extrapolate = false;
};

/// The default scenario matrix: edge-only comparison runs (idle plus the
/// three streaming bitrates), the end-to-end grid (idle, single-UE bitrate
/// sweep, both dual-UE bandwidths), and one renderer on/off step run.
inline std::vector<sim::ScenarioConfig> builtin_scenarios(
    std::uint64_t seed = 42, double duration_s = 300.0) {
  using sim::Campaign;
  using sim::Scenario;
  std::vector<sim::ScenarioConfig> out;
  const auto add = [&](Campaign campaign, Scenario scenario,
                       std::optional<double> bitrate_mbps, double bandwidth_mhz,
                       std::optional<double> toggle_at_s = std::nullopt) {
    sim::ScenarioConfig cfg;
    cfg.campaign = campaign;
    cfg.scenario = scenario;
    cfg.bitrate_mbps = bitrate_mbps;
    cfg.bandwidth_mhz = bandwidth_mhz;
    cfg.duration_s = duration_s;
    cfg.seed = seed;
    cfg.renderer_toggle_at_s = toggle_at_s;
    out.push_back(cfg);
  };
  add(Campaign::kComparison, Scenario::kIdleUEs, std::nullopt, 100.0);
  add(Campaign::kComparison, Scenario::k1ActiveUE, 10.0, 100.0);
  add(Campaign::kComparison, Scenario::k1ActiveUE, 25.0, 100.0);
  add(Campaign::kComparison, Scenario::k1ActiveUE, 40.0, 100.0);
  add(Campaign::kE2e, Scenario::kIdleUEs, std::nullopt, 100.0);
  add(Campaign::kE2e, Scenario::k1ActiveUE, 10.0, 100.0);
  add(Campaign::kE2e, Scenario::k1ActiveUE, 25.0, 100.0);
  add(Campaign::kE2e, Scenario::k1ActiveUE, 40.0, 100.0);
  add(Campaign::kE2e, Scenario::k2ActiveUEs, 40.0, 40.0);
  add(Campaign::kE2e, Scenario::k2ActiveUEs, 40.0, 100.0);
  add(Campaign::kE2e, Scenario::k2ActiveUEs, 40.0, 100.0, duration_s / 2.0);
  return out;
}

inline bool is_safe_path_component(const std::string& s) {
  if (s.empty() || s == "." || s == "..") {
    return false;
  }
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) {
      return false;
    }
  }
  return true;
}

/// Full up-front validation: every scenario is checked before anything runs.
inline void validate_plan(const ExperimentPlan& plan) {
  if (!is_safe_path_component(plan.experiment_id)) {
    throw PlanError("experiment id must be a plain file-system name, got '" +
                    plan.experiment_id + "'");
  }
  if (plan.scenarios.empty()) {
    throw PlanError("plan has no scenarios");
  }
  std::set<std::string> ids;
  for (const auto& cfg : plan.scenarios) {
    sim::validate(cfg, plan.allow_extrapolate);
    const std::string id = sim::run_id(cfg);
    if (!ids.insert(id).second) {
      throw PlanError("plan contains duplicate run: " + id);
    }
  }
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan plan;
  try {
    if (j.contains("experiment_id")) {
      plan.experiment_id = j.at("experiment_id").get<std::string>();
    }
    if (j.contains("calibration")) {
      plan.calibration = j.at("calibration").get<std::string>();
    }
    if (j.contains("output_dir")) {
      plan.output_dir = j.at("output_dir").get<std::string>();
    }
    for (const auto& s : j.at("scenarios")) {
      plan.scenarios.push_back(sim::scenario_config_from_json(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw PlanError(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

inline ExperimentPlan load_plan(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw MissingDataError("plan file not found: " + file.string());
  }
  const nlohmann::json j =
      nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw PlanError("plan file is not valid JSON: " + file.string());
  }
  return plan_from_json(j);
}

inline sim::CalibrationTable load_calibration(const std::string& spec) {
  if (spec.empty() || spec == kBuiltinCalibrationName) {
    return sim::CalibrationTable::builtin();
  }
  return sim::CalibrationTable::from_file(spec);
}

namespace detail {

/// Meter trace backed by the simulator: each channel reports the true
/// (noise-bearing, deterministic) power of its node at the tick covering the
/// query time. Nodes stay powered for the whole run, so the channel never
/// reads as off.
class SimTrace final : public meter::PowerTraceSource {
 public:
  explicit SimTrace(const sim::SimModel& model) : model_(model) {}

  std::optional<double> load_at(const std::string& channel_name,
                                std::int64_t timestamp_ms) override {
    const std::int64_t tick_ms =
        static_cast<std::int64_t>(model_.tick_s() * 1000.0 + 0.5);
    std::int64_t k = (timestamp_ms - model_.epoch_ms()) / tick_ms;
    if (k < 0) {
      k = 0;
    }
    if (k >= model_.tick_count()) {
      k = model_.tick_count() - 1;
    }
    std::lock_guard<std::mutex> lock(mu_);
    if (!cached_.has_value() || cached_k_ != k) {
      cached_ = model_.step(static_cast<int>(k));
      cached_k_ = k;
    }
    const auto it = cached_->true_power_w.find(channel_name);
    if (it == cached_->true_power_w.end()) {
      return std::nullopt;
    }
    return it->second;
  }

 private:
  const sim::SimModel& model_;
  std::mutex mu_;
  std::optional<sim::TickOutput> cached_;
  std::int64_t cached_k_ = -1;
};

}  // namespace detail

/// Executes one scenario into `run_dir`: hardware samples arrive through a
/// real HTTP poll of the mock meter, software samples through the
/// attribution pipeline, both on the same driven clock.
inline void run_one(const sim::ScenarioConfig& cfg,
                    const sim::CalibrationTable& cal,
                    const std::filesystem::path& run_dir,
                    bool allow_extrapolate,
                    const std::string& experiment_id) {
  const std::string id = sim::run_id(cfg);
  const sim::SimModel model(cfg, cal, allow_extrapolate);
  ManualClock clock(model.epoch_ms());

  meter::MockMeterConfig mcfg;
  mcfg.device_name = "wattbed-" + id;
  mcfg.port = 0;  // ephemeral, so parallel runs never collide
  mcfg.clock = &clock;
  std::map<int, std::string> channel_map;
  int next_channel = 1;
  for (const auto& node : model.nodes()) {
    mcfg.channels[next_channel] = node;
    channel_map[next_channel] = node;
    ++next_channel;
  }
  const auto server = meter::serve_mock_meter(
      mcfg, std::make_shared<detail::SimTrace>(model));
  meter::MeterPoller poller(mcfg.host, server->port(), channel_map);

  collector::SeriesStore store(run_dir);
  const auto& sw = cal.sw;

  std::vector<collector::ScrapeTarget> targets;
  targets.push_back(collector::ScrapeTarget{
      "meter", collector::TargetKind::kMeter, cfg.tick_s,
      [&](std::int64_t) {
        for (const auto& s : poller.poll()) {
          store.append({s.node_id, collector::kSourceHardware},
                       {s.timestamp_ms, s.power_w});
        }
      }});
  targets.push_back(collector::ScrapeTarget{
      "telemetry", collector::TargetKind::kTelemetry, cfg.tick_s,
      [&](std::int64_t scheduled_ms) {
        const std::int64_t tick_ms =
            static_cast<std::int64_t>(cfg.tick_s * 1000.0 + 0.5);
        const std::int64_t k = (scheduled_ms - model.epoch_ms()) / tick_ms;
        if (k < 0 || k >= model.tick_count()) {
          return;
        }
        const sim::TickOutput out = model.step(static_cast<int>(k));
        const double host_w =
            attribution::estimate_host_power(out.window, sw.counter_floor_w);
        const auto procs = attribution::attribute_processes(
            host_w, sw.attribution_baseline_w, out.processes, out.gpu);
        const auto pods = attribution::aggregate_containers(procs, {});
        store.append({"edge", collector::kSourceHost},
                     {scheduled_ms, host_w});
        for (const auto& pod : pods) {
          if (pod.container_id == attribution::kHostOtherContainer) {
            continue;  // residual bucket, not a pod reading
          }
          store.append({"edge", collector::container_source(pod.container_id)},
                       {scheduled_ms, pod.power_w});
        }
      }});

  collector::ScrapeScheduler scheduler(clock, std::move(targets));
  const std::int64_t tick_ms =
      static_cast<std::int64_t>(cfg.tick_s * 1000.0 + 0.5);
  const std::int64_t end_ms = model.epoch_ms() + model.tick_count() * tick_ms;
  scheduler.run(model.epoch_ms(), end_ms);
  server->stop();
  store.flush_all();

  for (const auto& node : model.nodes()) {
    if (store.sample_count({node, collector::kSourceHardware}) == 0) {
      throw meter::TransportError(poller.endpoint(),
                                  "no hardware samples collected for " + node,
                                  1, 0);
    }
  }
  const auto& status = scheduler.status();
  nlohmann::json fields = {{"experiment_id", experiment_id},
                           {"scenario", id},
                           {"dir", run_dir.string()}};
  for (const auto& [name, st] : status) {
    fields[name + "_scrapes"] = st.scrapes;
    fields[name + "_failures"] = st.failures;
  }
  log_info("run complete", fields);
}

inline std::filesystem::path experiment_dir(const ExperimentPlan& plan) {
  return plan.output_dir / plan.experiment_id;
}

inline std::filesystem::path run_dir_for(const ExperimentPlan& plan,
                                         const std::string& run_id) {
  return experiment_dir(plan) / "runs" / run_id;
}

inline void write_manifest(const ExperimentPlan& plan,
                           const sim::CalibrationTable& cal) {
  nlohmann::ordered_json j;
  j["schema"] = kManifestSchema;
  j["experiment_id"] = plan.experiment_id;
  j["calibration"] = plan.calibration;
  j["calibration_version"] = cal.version;
  j["epoch_ms"] = cal.epoch_ms;
  j["allow_extrapolate"] = plan.allow_extrapolate;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& cfg : plan.scenarios) {
    nlohmann::ordered_json r;
    r["id"] = sim::run_id(cfg);
    r["config"] = sim::to_json(cfg);
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  std::ofstream out(experiment_dir(plan) / "manifest.json");
  out << j.dump(2) << "\n";
  if (!out) {
    throw collector::StorageError("cannot write manifest under " +
                                  experiment_dir(plan).string());
  }
}

inline nlohmann::json read_manifest(const std::filesystem::path& exp_dir) {
  const std::filesystem::path file = exp_dir / "manifest.json";
  std::ifstream in(file);
  if (!in) {
    throw MissingDataError("no experiment manifest at " + file.string());
  }
  const nlohmann::json j =
      nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object() ||
      j.value("schema", "") != kManifestSchema) {
    throw PlanError("unrecognized manifest: " + file.string());
  }
  return j;
}

/// Runs the full plan. An existing experiment directory is refused unless
/// `force`, which replaces it. The manifest is written only after every
/// scenario finished, so its presence marks a complete experiment.
inline void run_experiment(const ExperimentPlan& plan, bool parallel,
                           bool force) {
  validate_plan(plan);
  const sim::CalibrationTable cal = load_calibration(plan.calibration);

  const std::filesystem::path exp_dir = experiment_dir(plan);
  if (std::filesystem::exists(exp_dir)) {
    if (!force) {
      throw PlanError("experiment '" + plan.experiment_id +
                      "' already exists under " + plan.output_dir.string() +
                      "; pass --force to replace it");
    }
    std::filesystem::remove_all(exp_dir);
  }
  std::filesystem::create_directories(exp_dir / "runs");
  log_info("experiment started",
           {{"experiment_id", plan.experiment_id},
            {"scenarios", plan.scenarios.size()},
            {"parallel", parallel}});

  if (!parallel) {
    for (const auto& cfg : plan.scenarios) {
      run_one(cfg, cal, run_dir_for(plan, sim::run_id(cfg)),
              plan.allow_extrapolate, plan.experiment_id);
    }
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(plan.scenarios.size());
    for (std::size_t i = 0; i < plan.scenarios.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          const auto& cfg = plan.scenarios[i];
          run_one(cfg, cal, run_dir_for(plan, sim::run_id(cfg)),
                  plan.allow_extrapolate, plan.experiment_id);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) {
      t.join();
    }
    for (const auto& err : errors) {
      if (err) {
        std::rethrow_exception(err);
      }
    }
  }
  write_manifest(plan, cal);
  log_info("experiment complete", {{"experiment_id", plan.experiment_id}});
}

/// Loads every stored run of an experiment back as aligned series.
inline std::vector<analysis::RunData> load_run_data(
    const std::filesystem::path& exp_dir, const nlohmann::json& manifest) {
  std::vector<analysis::RunData> runs;
  const std::int64_t epoch_ms = manifest.at("epoch_ms").get<std::int64_t>();
  for (const auto& entry : manifest.at("runs")) {
    const std::string id = entry.at("id").get<std::string>();
    const std::filesystem::path dir = exp_dir / "runs" / id;
    if (!std::filesystem::exists(dir)) {
      throw MissingDataError("run directory missing: " + dir.string());
    }
    analysis::RunData run;
    run.config = sim::scenario_config_from_json(entry.at("config"));
    collector::SeriesStore store(dir);
    for (const auto& key : store.list_series()) {
      const auto raw = store.query_range(key, INT64_MIN, INT64_MAX);
      run.series.push_back(
          collector::align_relative(key.node_id, key.source, raw, epoch_ms));
    }
    if (run.series.empty()) {
      throw MissingDataError("run has no stored series: " + dir.string());
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace wattbed::cli
