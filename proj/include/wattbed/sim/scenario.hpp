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

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace wattbed::sim {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The five metered testbed nodes, in report order.
inline constexpr std::array<const char*, 5> kNodes = {"core", "gnodeb", "edge",
                                                      "ue1", "ue2"};

enum class Scenario { kIdleUEs, k1ActiveUE, k2ActiveUEs };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::kIdleUEs:
      return "Idle_UEs";
    case Scenario::k1ActiveUE:
      return "1_active_UE";
    case Scenario::k2ActiveUEs:
      return "2_active_UEs";
  }
  return "?";
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "Idle_UEs") {
    return Scenario::kIdleUEs;
  }
  if (s == "1_active_UE") {
    return Scenario::k1ActiveUE;
  }
  if (s == "2_active_UEs") {
    return Scenario::k2ActiveUEs;
  }
  throw ValidationError("unknown scenario: " + s);
}

inline int active_ue_count(Scenario s) {
  switch (s) {
    case Scenario::kIdleUEs:
      return 0;
    case Scenario::k1ActiveUE:
      return 1;
    case Scenario::k2ActiveUEs:
      return 2;
  }
  return 0;
}

/// Which measurement campaign a run belongs to. The side-by-side metering of
/// the edge node (hardware vs host vs pod) and the all-node end-to-end
/// metering were separate sessions with slightly different edge levels, so
/// they calibrate separately.
enum class Campaign { kComparison, kE2e };

inline const char* to_string(Campaign c) {
  return c == Campaign::kComparison ? "comparison" : "e2e";
}

inline Campaign campaign_from_string(const std::string& s) {
  if (s == "comparison") {
    return Campaign::kComparison;
  }
  if (s == "e2e") {
    return Campaign::kE2e;
  }
  throw ValidationError("unknown campaign: " + s);
}

struct ScenarioConfig {
  Scenario scenario = Scenario::kIdleUEs;
  std::optional<double> bitrate_mbps;  // required iff a UE is active
  double bandwidth_mhz = 100.0;
  double duration_s = 300.0;
  std::uint64_t seed = 42;
  double tick_s = 1.0;
  Campaign campaign = Campaign::kE2e;
  // When set, the renderer starts stopped and is started at this offset.
  std::optional<double> renderer_toggle_at_s;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Validates a configuration against the measured grid: radio bandwidth 40 or
/// 100 MHz, 40 MHz only with two active UEs, bitrates 10/25/40 Mbps, and two
/// active UEs measured at 40 Mbps only. `allow_extrapolate` relaxes the grid
/// (not the structural rules) for off-grid what-if runs.
inline void validate(const ScenarioConfig& cfg, bool allow_extrapolate) {
  if (!(cfg.duration_s > 0.0)) {
    throw ValidationError("duration must be > 0");
  }
  if (!(cfg.tick_s > 0.0) || cfg.tick_s > cfg.duration_s) {
    throw ValidationError("tick must be > 0 and no longer than the duration");
  }
  const bool active = cfg.scenario != Scenario::kIdleUEs;
  if (!active && cfg.bitrate_mbps.has_value()) {
    throw ValidationError("Idle_UEs takes no bitrate");
  }
  if (active && !cfg.bitrate_mbps.has_value()) {
    throw ValidationError(std::string(to_string(cfg.scenario)) +
                          " requires a bitrate");
  }
  if (cfg.bandwidth_mhz != 40.0 && cfg.bandwidth_mhz != 100.0) {
    throw ValidationError("bandwidth must be 40 or 100 MHz");
  }
  if (cfg.renderer_toggle_at_s.has_value()) {
    if (!active) {
      throw ValidationError("renderer toggle needs an active scenario");
    }
    if (*cfg.renderer_toggle_at_s <= 0.0 ||
        *cfg.renderer_toggle_at_s >= cfg.duration_s) {
      throw ValidationError("renderer toggle must fall inside the run");
    }
  }
  if (allow_extrapolate) {
    if (active && !(*cfg.bitrate_mbps > 0.0)) {
      throw ValidationError("bitrate must be > 0");
    }
    return;
  }
  if (cfg.bandwidth_mhz == 40.0 && cfg.scenario != Scenario::k2ActiveUEs) {
    throw ValidationError(
        "40 MHz was only measured with 2_active_UEs; pass --extrapolate to "
        "run it anyway");
  }
  if (active) {
    const double b = *cfg.bitrate_mbps;
    if (b != 10.0 && b != 25.0 && b != 40.0) {
      throw ValidationError(
          "bitrate must be one of 10, 25, 40 Mbps; pass --extrapolate for "
          "other values");
    }
    if (cfg.scenario == Scenario::k2ActiveUEs && b != 40.0) {
      throw ValidationError(
          "2_active_UEs was only measured at 40 Mbps; pass --extrapolate to "
          "run it anyway");
    }
  }
  if (cfg.campaign == Campaign::kComparison &&
      cfg.scenario == Scenario::k2ActiveUEs) {
    throw ValidationError(
        "the comparison campaign covered Idle_UEs and 1_active_UE only; pass "
        "--extrapolate to run it anyway");
  }
}

inline nlohmann::ordered_json to_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["scenario"] = to_string(cfg.scenario);
  if (cfg.bitrate_mbps.has_value()) {
    j["bitrate_mbps"] = *cfg.bitrate_mbps;
  }
  j["bandwidth_mhz"] = cfg.bandwidth_mhz;
  j["duration_s"] = cfg.duration_s;
  j["seed"] = cfg.seed;
  j["tick_s"] = cfg.tick_s;
  j["campaign"] = to_string(cfg.campaign);
  if (cfg.renderer_toggle_at_s.has_value()) {
    j["renderer_toggle_at_s"] = *cfg.renderer_toggle_at_s;
  }
  return j;
}

inline ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ValidationError("scenario config must be a JSON object");
  }
  ScenarioConfig cfg;
  try {
    cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    if (j.contains("bitrate_mbps")) {
      cfg.bitrate_mbps = j.at("bitrate_mbps").get<double>();
    }
    cfg.bandwidth_mhz = j.value("bandwidth_mhz", 100.0);
    cfg.duration_s = j.value("duration_s", 300.0);
    cfg.seed = j.value("seed", std::uint64_t{42});
    cfg.tick_s = j.value("tick_s", 1.0);
    if (j.contains("campaign")) {
      cfg.campaign = campaign_from_string(j.at("campaign").get<std::string>());
    }
    if (j.contains("renderer_toggle_at_s")) {
      cfg.renderer_toggle_at_s = j.at("renderer_toggle_at_s").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad scenario config: ") + e.what());
  }
  return cfg;
}

/// Stable identifier used for storage directories and report keys, e.g.
/// "e2e-1_active_UE-40M-bw100" or "comparison-Idle_UEs-bw100".
inline std::string run_id(const ScenarioConfig& cfg) {
  std::string id = std::string(to_string(cfg.campaign)) + "-" +
                   to_string(cfg.scenario);
  if (cfg.bitrate_mbps.has_value()) {
    const double b = *cfg.bitrate_mbps;
    const auto whole = static_cast<std::int64_t>(b);
    id += "-" + (b == static_cast<double>(whole)
                     ? std::to_string(whole)
                     : std::to_string(b));
    id += "M";
  }
  const auto bw = static_cast<std::int64_t>(cfg.bandwidth_mhz);
  id += "-bw" + std::to_string(bw);
  if (cfg.renderer_toggle_at_s.has_value()) {
    id += "-toggle";
  }
  return id;
}

}  // namespace wattbed::sim
