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
// wattbed: dual-source power measurement testbed.
//
//   wattbed run         execute a scenario matrix against the mock meter
//   wattbed report      summarize a stored experiment into tables and JSON
//   wattbed mock-meter  serve a standalone meter endpoint with fixed loads
//   wattbed replay      rebuild a report from exported CSV traces

#include <atomic>
#include <csignal>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wattbed/cli/commands.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void handle_signal(int) { g_interrupted.store(true); }

// "node=watts" pairs from repeated --load flags.
std::map<std::string, double> parse_loads(
    const std::vector<std::string>& specs) {
  std::map<std::string, double> loads;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw wattbed::cli::PlanError("expected node=watts, got '" + spec + "'");
    }
    loads[spec.substr(0, eq)] =
        wattbed::parse_double(std::string_view(spec).substr(eq + 1));
  }
  return loads;
}

}  // namespace

int main(int argc, char** argv) {
  using wattbed::cli::kExitValidation;

  CLI::App app{"dual-source power measurement testbed"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress informational log records");

  // run
  wattbed::cli::RunOptions run_opts;
  std::uint64_t seed_value = 0;
  double duration_value = 0.0;
  auto* run = app.add_subcommand("run", "execute a scenario matrix");
  run->add_option("--plan", run_opts.plan_file,
                  "plan file (default: built-in matrix)");
  run->add_option("--experiment-id", run_opts.experiment_id,
                  "override the experiment id");
  run->add_option("--out", run_opts.out, "output root directory");
  run->add_option("--calibration", run_opts.calibration,
                  "calibration file, or 'builtin'");
  auto* seed_opt = run->add_option("--seed", seed_value,
                                   "override every scenario seed");
  auto* dur_opt = run->add_option("--duration", duration_value,
                                  "override run duration, seconds");
  run->add_flag("--force", run_opts.force,
                "replace an existing experiment with the same id");
  run->add_flag("--parallel", run_opts.parallel,
                "run scenarios concurrently on distinct ports");
  run->add_flag("--extrapolate", run_opts.extrapolate,
                "accept operating points outside the calibrated grid");

  // report
  wattbed::cli::ReportArgs report_args;
  auto* report = app.add_subcommand("report", "summarize a stored experiment");
  report->add_option("experiment_id", report_args.experiment_id,
                     "experiment to summarize")
      ->required();
  report->add_option("--out", report_args.out, "output root directory");
  report->add_option("--warmup", report_args.warmup_s,
                     "seconds trimmed from the start of every series");

  // mock-meter
  wattbed::cli::MockMeterArgs meter_args;
  std::vector<std::string> load_specs;
  auto* mock = app.add_subcommand("mock-meter",
                                  "serve a standalone meter endpoint");
  mock->add_option("--host", meter_args.host, "bind address");
  mock->add_option("--port", meter_args.port, "bind port");
  mock->add_option("--load", load_specs,
                   "channel load as node=watts (repeatable; default "
                   "edge=133.6)");
  mock->add_option("--duration", meter_args.duration_s,
                   "serve for this many seconds (default: until interrupted)");

  // replay
  wattbed::cli::ReplayArgs replay_args;
  auto* replay = app.add_subcommand("replay",
                                    "rebuild a report from exported traces");
  replay->add_option("traces", replay_args.trace_dir,
                     "traces directory written by 'report'")
      ->required();
  replay->add_option("--out", replay_args.out, "report destination directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  wattbed::JsonlLogger::instance().set_quiet(quiet);

  if (run->parsed()) {
    if (seed_opt->count() > 0) {
      run_opts.seed = seed_value;
    }
    if (dur_opt->count() > 0) {
      run_opts.duration_s = duration_value;
    }
    return wattbed::cli::cmd_run(run_opts);
  }
  if (report->parsed()) {
    return wattbed::cli::cmd_report(report_args);
  }
  if (mock->parsed()) {
    try {
      if (!load_specs.empty()) {
        meter_args.loads = parse_loads(load_specs);
      }
    } catch (const std::exception& e) {
      wattbed::log_error(e.what(), {{"command", "mock-meter"}});
      return kExitValidation;
    }
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    meter_args.stop_flag = &g_interrupted;
    return wattbed::cli::cmd_mock_meter(meter_args);
  }
  return wattbed::cli::cmd_replay(replay_args);
}
