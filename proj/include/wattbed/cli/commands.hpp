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
// The four commands behind the wattbed binary: run, report, mock-meter,
// replay. Each returns a process exit code: 0 ok, 2 rejected input, 3
// runtime failure, 4 missing data. Library-level errors stay typed; this is
// the only layer that maps them to codes.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wattbed/analysis/export.hpp"
#include "wattbed/analysis/report.hpp"
#include "wattbed/analysis/stats.hpp"
#include "wattbed/cli/orchestrator.hpp"
#include "wattbed/collector/csvio.hpp"
#include "wattbed/collector/exposition.hpp"
#include "wattbed/common/log.hpp"
#include "wattbed/meter/mock_meter.hpp"
#include "wattbed/meter/trace.hpp"

namespace wattbed::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitMissingData = 4;

inline constexpr const char* kOutputDirEnv = "WATTBED_OUT";
inline constexpr const char* kDefaultOutputDir = "wattbed-out";

/// Output directory precedence: explicit flag, then the plan file, then the
/// environment, then ./wattbed-out.
inline std::filesystem::path resolve_output_dir(
    const std::string& flag_value, const std::filesystem::path& plan_value) {
  if (!flag_value.empty()) {
    return flag_value;
  }
  if (!plan_value.empty()) {
    return plan_value;
  }
  if (const char* env = std::getenv(kOutputDirEnv);
      env != nullptr && *env != '\0') {
    return env;
  }
  return kDefaultOutputDir;
}

namespace detail {

template <typename Fn>
int guarded(const char* command, Fn&& fn) {
  const auto fail = [&](int code, const char* kind, const std::string& what) {
    log_error(what, {{"command", command}, {"kind", kind}, {"exit", code}});
    return code;
  };
  try {
    fn();
    return kExitOk;
  } catch (const analysis::EmptyAfterTrim& e) {
    return fail(kExitMissingData, "empty_series", e.what());
  } catch (const MissingDataError& e) {
    return fail(kExitMissingData, "missing_data", e.what());
  } catch (const PlanError& e) {
    return fail(kExitValidation, "plan", e.what());
  } catch (const sim::ValidationError& e) {
    return fail(kExitValidation, "scenario", e.what());
  } catch (const sim::CalibrationError& e) {
    return fail(kExitValidation, "calibration", e.what());
  } catch (const collector::MalformedLine& e) {
    return fail(kExitValidation, "exposition", e.what());
  } catch (const collector::CsvError& e) {
    return fail(kExitValidation, "csv", e.what());
  } catch (const analysis::AnalysisError& e) {
    return fail(kExitValidation, "analysis", e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "runtime", e.what());
  }
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw collector::StorageError("cannot write " + path.string());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------- run

struct RunOptions {
  std::string plan_file;       // empty: builtin scenario matrix
  std::string experiment_id;   // override; empty keeps the plan's id
  std::string out;             // --out override
  std::string calibration;     // override; empty keeps the plan's choice
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  bool force = false;
  bool parallel = false;
  bool extrapolate = false;
};

inline ExperimentPlan assemble_plan(const RunOptions& opt) {
  ExperimentPlan plan;
  if (!opt.plan_file.empty()) {
    plan = load_plan(opt.plan_file);
  } else {
    plan.scenarios = builtin_scenarios();
  }
  if (!opt.experiment_id.empty()) {
    plan.experiment_id = opt.experiment_id;
  }
  if (!opt.calibration.empty()) {
    plan.calibration = opt.calibration;
  }
  plan.allow_extrapolate = opt.extrapolate;
  for (auto& cfg : plan.scenarios) {
    if (opt.seed.has_value()) {
      cfg.seed = *opt.seed;
    }
    if (opt.duration_s.has_value()) {
      const double scale = *opt.duration_s / cfg.duration_s;
      if (cfg.renderer_toggle_at_s.has_value()) {
        cfg.renderer_toggle_at_s = *cfg.renderer_toggle_at_s * scale;
      }
      cfg.duration_s = *opt.duration_s;
    }
  }
  plan.output_dir = resolve_output_dir(opt.out, plan.output_dir);
  return plan;
}

inline int cmd_run(const RunOptions& opt) {
  return detail::guarded("run", [&] {
    const ExperimentPlan plan = assemble_plan(opt);
    run_experiment(plan, opt.parallel, opt.force);
  });
}

// ------------------------------------------------------------------- report

struct ReportArgs {
  std::string experiment_id;
  std::string out;          // experiment root (same as run's --out)
  double warmup_s = analysis::kDefaultWarmupS;
};

/// Builds the report for a stored experiment and writes it under
/// `<out>/<experiment_id>/report/`: report.json, the rendered table files,
/// and re-importable traces. Returns the report directory.
inline std::filesystem::path write_report_for(
    const std::filesystem::path& exp_dir, double warmup_s) {
  const nlohmann::json manifest = read_manifest(exp_dir);
  const std::vector<analysis::RunData> runs =
      load_run_data(exp_dir, manifest);

  analysis::ReportOptions ropt;
  ropt.warmup_s = warmup_s;
  ropt.calibration_version = manifest.value("calibration_version", "");
  const analysis::EnergyReport report = analysis::build_report(runs, ropt);

  const std::filesystem::path report_dir = exp_dir / "report";
  std::filesystem::create_directories(report_dir);
  detail::write_text(report_dir / "report.json", report.to_string());
  for (const auto& [name, text] : analysis::render_tables(report.doc)) {
    detail::write_text(report_dir / name, text);
  }

  const std::filesystem::path traces_dir = report_dir / "traces";
  std::filesystem::create_directories(traces_dir);
  nlohmann::ordered_json meta;
  meta["schema"] = kTraceSchema;
  meta["calibration_version"] = ropt.calibration_version;
  meta["warmup_s"] = ropt.warmup_s;
  detail::write_text(traces_dir / "meta.json", meta.dump(2) + "\n");
  for (const auto& run : runs) {
    const std::filesystem::path dir = traces_dir / sim::run_id(run.config);
    analysis::export_trace(run.series, dir);
    detail::write_text(dir / "config.json",
                       sim::to_json(run.config).dump(2) + "\n");
  }

  for (const std::string& warning :
       report.doc.at("warnings").get<std::vector<std::string>>()) {
    log_warn(warning, {{"experiment_id",
                        manifest.value("experiment_id", "")}});
  }
  log_info("report written", {{"dir", report_dir.string()}});
  return report_dir;
}

inline int cmd_report(const ReportArgs& args) {
  return detail::guarded("report", [&] {
    if (!is_safe_path_component(args.experiment_id)) {
      throw PlanError("experiment id must be a plain file-system name, got '" +
                      args.experiment_id + "'");
    }
    const std::filesystem::path out = resolve_output_dir(args.out, {});
    write_report_for(out / args.experiment_id, args.warmup_s);
  });
}

// --------------------------------------------------------------- mock-meter

struct MockMeterArgs {
  std::string host = "127.0.0.1";
  int port = 9180;
  std::map<std::string, double> loads = {{"edge", 133.6}};
  double duration_s = 0.0;  // 0: serve until the stop flag is raised
  const std::atomic<bool>* stop_flag = nullptr;
};

inline int cmd_mock_meter(const MockMeterArgs& args) {
  return detail::guarded("mock-meter", [&] {
    if (args.loads.empty()) {
      throw PlanError("mock meter needs at least one channel load");
    }
    meter::MockMeterConfig cfg;
    cfg.host = args.host;
    cfg.port = args.port;
    std::map<std::string, double> loads;
    int channel = 1;
    for (const auto& [node, watts] : args.loads) {
      if (!(watts >= 0.0)) {
        throw PlanError("channel load must be non-negative: " + node);
      }
      cfg.channels[channel++] = node;
      loads[node] = watts;
    }
    const auto server = meter::serve_mock_meter(
        cfg, std::make_shared<meter::ConstantTrace>(loads));
    log_info("mock meter serving",
             {{"url", server->base_url() + "/netio.json"},
              {"channels", args.loads.size()}});
    const auto started = std::chrono::steady_clock::now();
    const auto deadline =
        started + std::chrono::duration<double>(args.duration_s);
    while (args.duration_s <= 0.0 ||
           std::chrono::steady_clock::now() < deadline) {
      if (args.stop_flag != nullptr && args.stop_flag->load()) {
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server->stop();
  });
}

// ------------------------------------------------------------------- replay

struct ReplayArgs {
  std::string trace_dir;  // the traces/ directory a report wrote
  std::string out;        // destination; default <trace_dir>/replay
};

/// Rebuilds the report from exported CSV traces alone. Output is
/// byte-identical to the report the traces came from.
inline std::filesystem::path replay_traces(
    const std::filesystem::path& trace_dir,
    const std::filesystem::path& out_dir) {
  const std::filesystem::path meta_file = trace_dir / "meta.json";
  std::ifstream in(meta_file);
  if (!in) {
    throw MissingDataError("no trace metadata at " + meta_file.string());
  }
  const nlohmann::json meta =
      nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (meta.is_discarded() || !meta.is_object() ||
      meta.value("schema", "") != kTraceSchema) {
    throw PlanError("unrecognized trace metadata: " + meta_file.string());
  }

  std::vector<analysis::RunData> runs;
  std::vector<std::filesystem::path> run_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(trace_dir)) {
    if (entry.is_directory()) {
      run_dirs.push_back(entry.path());
    }
  }
  std::sort(run_dirs.begin(), run_dirs.end());
  for (const auto& dir : run_dirs) {
    std::ifstream cfg_in(dir / "config.json");
    if (!cfg_in) {
      throw MissingDataError("trace run lacks config.json: " + dir.string());
    }
    const nlohmann::json cfg_json =
        nlohmann::json::parse(cfg_in, nullptr, /*allow_exceptions=*/false);
    if (cfg_json.is_discarded()) {
      throw PlanError("malformed config.json in " + dir.string());
    }
    analysis::RunData run;
    run.config = sim::scenario_config_from_json(cfg_json);
    run.series = analysis::import_trace(dir);
    runs.push_back(std::move(run));
  }
  if (runs.empty()) {
    throw MissingDataError("no trace runs under " + trace_dir.string());
  }

  analysis::ReportOptions ropt;
  ropt.warmup_s = meta.value("warmup_s", analysis::kDefaultWarmupS);
  ropt.calibration_version = meta.value("calibration_version", "");
  const analysis::EnergyReport report = analysis::build_report(runs, ropt);

  std::filesystem::create_directories(out_dir);
  detail::write_text(out_dir / "report.json", report.to_string());
  for (const auto& [name, text] : analysis::render_tables(report.doc)) {
    detail::write_text(out_dir / name, text);
  }
  log_info("replay report written", {{"dir", out_dir.string()}});
  return out_dir;
}

inline int cmd_replay(const ReplayArgs& args) {
  return detail::guarded("replay", [&] {
    if (args.trace_dir.empty()) {
      throw PlanError("replay needs a trace directory");
    }
    const std::filesystem::path trace_dir = args.trace_dir;
    // Default output lands next to the trace directory, never inside it, so
    // a later replay does not mistake it for a stored run.
    const std::filesystem::path out =
        args.out.empty() ? trace_dir.parent_path() / "replay"
                         : std::filesystem::path(args.out);
    replay_traces(trace_dir, out);
  });
}

}  // namespace wattbed::cli
