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

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "wattbed/analysis/report.hpp"
#include "wattbed/cli/commands.hpp"
#include "wattbed/cli/orchestrator.hpp"
#include "wattbed/common/log.hpp"
#include "wattbed/meter/mock_meter.hpp"
#include "wattbed/meter/poll.hpp"
#include "wattbed/meter/trace.hpp"

using namespace wattbed;
using namespace wattbed::cli;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("wattbed-cli-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

/// Three-run plan kept short so the whole suite stays fast.
std::string small_plan_json(const std::string& experiment_id) {
  nlohmann::ordered_json plan;
  plan["experiment_id"] = experiment_id;
  plan["scenarios"] = nlohmann::json::array();
  const auto scenario = [](const char* campaign, const char* sc,
                           std::optional<double> bitrate) {
    nlohmann::ordered_json j;
    j["scenario"] = sc;
    if (bitrate.has_value()) {
      j["bitrate_mbps"] = *bitrate;
    }
    j["duration_s"] = 40.0;
    j["campaign"] = campaign;
    return j;
  };
  plan["scenarios"].push_back(scenario("comparison", "Idle_UEs", {}));
  plan["scenarios"].push_back(scenario("comparison", "1_active_UE", 10.0));
  plan["scenarios"].push_back(scenario("e2e", "Idle_UEs", {}));
  return plan.dump(2);
}

fs::path write_plan(const TempDir& tmp, const std::string& text) {
  const fs::path file = tmp.path / "plan.json";
  std::ofstream out(file);
  out << text;
  return file;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("a plan with an invalid scenario fails before anything runs") {
  JsonlLogger::instance().set_quiet(true);
  TempDir tmp;
  nlohmann::ordered_json plan;
  plan["experiment_id"] = "bad";
  plan["scenarios"] = {{{"scenario", "Idle_UEs"}, {"bitrate_mbps", 10.0}}};
  const fs::path file = write_plan(tmp, plan.dump());

  RunOptions opt;
  opt.plan_file = file.string();
  opt.out = (tmp.path / "out").string();
  CHECK(cmd_run(opt) == kExitValidation);
  CHECK_FALSE(fs::exists(tmp.path / "out" / "bad"));
}

TEST_CASE("run, refuse to overwrite, then force") {
  JsonlLogger::instance().set_quiet(true);
  TempDir tmp;
  const fs::path file = write_plan(tmp, small_plan_json("exp"));

  RunOptions opt;
  opt.plan_file = file.string();
  opt.out = (tmp.path / "out").string();
  REQUIRE(cmd_run(opt) == kExitOk);

  const fs::path exp_dir = tmp.path / "out" / "exp";
  CHECK(fs::exists(exp_dir / "manifest.json"));
  CHECK(fs::exists(exp_dir / "runs" / "comparison-Idle_UEs-bw100"));

  // A stored experiment is never silently clobbered.
  CHECK(cmd_run(opt) == kExitValidation);
  opt.force = true;
  CHECK(cmd_run(opt) == kExitOk);
}

TEST_CASE("the report pipeline lands on the calibrated levels") {
  JsonlLogger::instance().set_quiet(true);
  TempDir tmp;
  const fs::path file = write_plan(tmp, small_plan_json("exp"));

  RunOptions opt;
  opt.plan_file = file.string();
  opt.out = (tmp.path / "out").string();
  REQUIRE(cmd_run(opt) == kExitOk);

  ReportArgs rep;
  rep.experiment_id = "exp";
  rep.out = opt.out;
  REQUIRE(cmd_report(rep) == kExitOk);

  const fs::path report_dir = tmp.path / "out" / "exp" / "report";
  const auto doc = nlohmann::json::parse(read_file(report_dir / "report.json"));
  CHECK_NOTHROW(analysis::validate_report(doc));

  const auto& idle = doc.at("comparison").at("idle");
  CHECK_THAT(idle.at("hardware_w").get<double>(), WithinRel(133.6, 0.02));
  CHECK_THAT(idle.at("host_w").get<double>(), WithinRel(106.85, 0.02));
  CHECK_THAT(doc.at("e2e").at("idle").at("total_w").get<double>(),
             WithinRel(318.1, 0.02));

  CHECK(fs::exists(report_dir / "table1.txt"));
  CHECK(fs::exists(report_dir / "table3.txt"));
  CHECK(fs::exists(report_dir / "traces" / "meta.json"));
  CHECK(fs::exists(report_dir / "traces" / "comparison-Idle_UEs-bw100" /
                   "combined.csv"));
}

TEST_CASE("reporting an absent experiment is a missing-data failure") {
  JsonlLogger::instance().set_quiet(true);
  TempDir tmp;
  ReportArgs rep;
  rep.experiment_id = "never-ran";
  rep.out = tmp.path.string();
  CHECK(cmd_report(rep) == kExitMissingData);

  rep.experiment_id = "../evil";
  CHECK(cmd_report(rep) == kExitValidation);
}

TEST_CASE("replaying exported traces rebuilds the identical report") {
  JsonlLogger::instance().set_quiet(true);
  TempDir tmp;
  const fs::path file = write_plan(tmp, small_plan_json("exp"));

  RunOptions opt;
  opt.plan_file = file.string();
  opt.out = (tmp.path / "out").string();
  REQUIRE(cmd_run(opt) == kExitOk);
  ReportArgs rep;
  rep.experiment_id = "exp";
  rep.out = opt.out;
  REQUIRE(cmd_report(rep) == kExitOk);

  const fs::path report_dir = tmp.path / "out" / "exp" / "report";
  ReplayArgs replay;
  replay.trace_dir = (report_dir / "traces").string();
  replay.out = (tmp.path / "replayed").string();
  REQUIRE(cmd_replay(replay) == kExitOk);

  CHECK(read_file(tmp.path / "replayed" / "report.json") ==
        read_file(report_dir / "report.json"));
}

TEST_CASE("replay needs the trace metadata") {
  JsonlLogger::instance().set_quiet(true);
  TempDir tmp;
  ReplayArgs replay;
  replay.trace_dir = tmp.path.string();
  replay.out = (tmp.path / "out").string();
  CHECK(cmd_replay(replay) == kExitMissingData);

  ReplayArgs blank;
  CHECK(cmd_replay(blank) == kExitValidation);
}

TEST_CASE("binding an occupied meter port is a runtime failure") {
  JsonlLogger::instance().set_quiet(true);
  meter::MockMeterConfig cfg;
  cfg.channels = {{1, "edge"}};
  cfg.port = 0;
  const auto holder = meter::serve_mock_meter(
      cfg, std::make_shared<meter::ConstantTrace>(
               std::map<std::string, double>{{"edge", 1.0}}));

  MockMeterArgs args;
  args.port = holder->port();
  args.duration_s = 0.05;
  CHECK(cmd_mock_meter(args) == kExitRuntime);
}

TEST_CASE("a served meter answers with the configured loads") {
  JsonlLogger::instance().set_quiet(true);
  // Grab a port the kernel considers free, then hand it to the command.
  int port = 0;
  {
    meter::MockMeterConfig probe;
    probe.channels = {{1, "edge"}};
    probe.port = 0;
    const auto server = meter::serve_mock_meter(
        probe, std::make_shared<meter::ConstantTrace>(
                   std::map<std::string, double>{{"edge", 1.0}}));
    port = server->port();
    server->stop();
  }

  std::atomic<bool> stop{false};
  MockMeterArgs args;
  args.port = port;
  args.loads = {{"edge", 120.0}, {"gnodeb", 161.4}};
  args.stop_flag = &stop;
  int rc = -1;
  std::thread serving([&] { rc = cmd_mock_meter(args); });

  std::vector<meter::MeterSample> samples;
  for (int attempt = 0; attempt < 50 && samples.empty(); ++attempt) {
    try {
      samples = meter::poll_meter("127.0.0.1", port,
                                  {{1, "edge"}, {2, "gnodeb"}});
    } catch (const meter::TransportError&) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }
  stop.store(true);
  serving.join();

  REQUIRE(samples.size() == 2);
  CHECK(samples[0].node_id == "edge");
  CHECK(samples[0].power_w == 120.0);
  CHECK(samples[1].power_w == 161.4);
  CHECK(rc == kExitOk);
}

TEST_CASE("shortening a run rescales the toggle point with it") {
  RunOptions opt;
  opt.duration_s = 60.0;
  const ExperimentPlan plan = assemble_plan(opt);
  bool saw_toggle = false;
  for (const auto& cfg : plan.scenarios) {
    CHECK(cfg.duration_s == 60.0);
    if (cfg.renderer_toggle_at_s.has_value()) {
      saw_toggle = true;
      CHECK(*cfg.renderer_toggle_at_s == 30.0);
    }
  }
  CHECK(saw_toggle);
}

TEST_CASE("output directory precedence is flag, plan, environment, default") {
  CHECK(resolve_output_dir("flagged", "planned") == fs::path("flagged"));
  CHECK(resolve_output_dir("", "planned") == fs::path("planned"));

  ::setenv(kOutputDirEnv, "from-env", 1);
  CHECK(resolve_output_dir("", "") == fs::path("from-env"));
  ::unsetenv(kOutputDirEnv);
  CHECK(resolve_output_dir("", "") == fs::path(kDefaultOutputDir));
}
