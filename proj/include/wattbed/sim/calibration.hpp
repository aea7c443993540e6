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
// Calibrated power levels for the testbed model. Two measurement campaigns
// calibrate separately: the end-to-end campaign metered all five nodes, the
// comparison campaign metered the edge node three ways (wall socket, host
// telemetry, renderer pod). A versioned copy of the table ships inside the
// binary; external JSON files with the same schema can replace it.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wattbed/sim/scenario.hpp"

namespace wattbed::sim {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Edge-node means from the side-by-side campaign, watts.
struct ComparisonRow {
  double hardware = 0.0;
  double host = 0.0;
  double container = 0.0;
};

struct SoftwareModelParams {
  double counter_floor_w = 40.0;        // board power the counter cannot see
  double attribution_baseline_w = 70.0; // host idle share owned by no process
  double gap_fit_bitrate_mbps = 10.0;   // active point used to fit the gap
  double gpu_power_idle_w = 12.0;
  double gpu_power_active_w = 35.0;
  double gpu_util_idle = 0.05;
  double gpu_util_active = 0.65;
  double renderer_gpu_share_idle = 0.0;
  double renderer_gpu_share_active = 0.85;
  int cpu_count = 32;
  double busy_fraction_idle = 0.04;
  double busy_fraction_active = 0.35;
  int renderer_pid = 101;
  int background_pid = 202;
  std::string renderer_container = "renderer";
};

struct NoiseParams {
  double hardware_sigma_w = 5.0;
  double host_sigma_w = 1.0;
  double container_sigma_w = 0.5;
  double gpu_sigma_w = 0.8;
  double sigma_reference_w = 133.6;  // sigma scales with mean/reference
  double sigma_scale_min = 0.02;
  double spike_rate_hz = 0.05;
  double spike_amp_min_w = 10.0;
  double spike_amp_max_w = 30.0;
  int spike_width_min_ticks = 1;
  int spike_width_max_ticks = 2;
};

class CalibrationTable {
 public:
  struct E2eRow {
    Scenario scenario = Scenario::k1ActiveUE;
    double bandwidth_mhz = 100.0;
    double bitrate_mbps = 0.0;
    std::map<std::string, double> watts;  // node -> mean W; ue2 may be absent
  };

  std::string version;
  std::int64_t epoch_ms = 0;
  std::map<std::string, double> e2e_idle;  // node -> W, 100 MHz
  std::vector<E2eRow> e2e_active;
  ComparisonRow cmp_idle;
  std::map<double, ComparisonRow> cmp_active;  // bitrate -> row
  SoftwareModelParams sw;
  NoiseParams noise;

  // --------------------------------------------------------------------------
  // Loading
  // --------------------------------------------------------------------------

  static CalibrationTable from_json(const nlohmann::json& j);
  static CalibrationTable from_file(const std::filesystem::path& path);
  /// The table compiled into the binary.
  static CalibrationTable builtin();

  void validate() const {
    for (const char* node : kNodes) {
      if (!e2e_idle.contains(node)) {
        throw CalibrationError(std::string("idle watts missing for ") + node);
      }
    }
    require_e2e(Scenario::k1ActiveUE, 100.0, 10.0);
    require_e2e(Scenario::k1ActiveUE, 100.0, 25.0);
    require_e2e(Scenario::k1ActiveUE, 100.0, 40.0);
    require_e2e(Scenario::k2ActiveUEs, 40.0, 40.0);
    require_e2e(Scenario::k2ActiveUEs, 100.0, 40.0);
    for (const double b : {10.0, 25.0, 40.0}) {
      if (!cmp_active.contains(b)) {
        throw CalibrationError("comparison row missing for bitrate " +
                               std::to_string(b));
      }
    }
    const auto positive = [](double v, const char* what) {
      if (!(v > 0.0)) {
        throw CalibrationError(std::string(what) + " must be > 0");
      }
    };
    for (const auto& [node, w] : e2e_idle) {
      positive(w, node.c_str());
    }
    for (const auto& row : e2e_active) {
      for (const auto& [node, w] : row.watts) {
        positive(w, node.c_str());
      }
    }
    positive(cmp_idle.hardware, "comparison idle hardware");
    positive(cmp_idle.host, "comparison idle host");
    positive(cmp_idle.container, "comparison idle container");
    for (const auto& [b, row] : cmp_active) {
      positive(row.hardware, "comparison hardware");
      positive(row.host, "comparison host");
      positive(row.container, "comparison container");
    }
  }

  // --------------------------------------------------------------------------
  // Lookups
  // --------------------------------------------------------------------------

  const E2eRow* find_e2e(Scenario sc, double bandwidth_mhz,
                         double bitrate_mbps) const {
    for (const auto& row : e2e_active) {
      if (row.scenario == sc && row.bandwidth_mhz == bandwidth_mhz &&
          row.bitrate_mbps == bitrate_mbps) {
        return &row;
      }
    }
    return nullptr;
  }

  /// Comparison-campaign edge means at a bitrate, linearly interpolated
  /// between calibrated points and clamped beyond them.
  ComparisonRow comparison_at(double bitrate_mbps) const {
    return interp_cmp(bitrate_mbps);
  }

  /// Renderer pod share of host power at a bitrate (idle share for nullopt).
  double container_share_at(std::optional<double> bitrate_mbps) const {
    if (!bitrate_mbps.has_value()) {
      return cmp_idle.container / cmp_idle.host;
    }
    const ComparisonRow row = interp_cmp(*bitrate_mbps);
    return row.container / row.host;
  }

  /// Interpolated value of one node's mean over the 1_active_UE bitrate
  /// sweep at 100 MHz. The broadcast architecture makes edge and UE power a
  /// function of (bitrate, bandwidth) alone, so 2_active_UEs runs share it.
  double e2e_bitrate_curve(const std::string& node,
                           double bitrate_mbps) const {
    std::map<double, double> pts;
    for (const auto& row : e2e_active) {
      if (row.scenario == Scenario::k1ActiveUE &&
          row.bandwidth_mhz == 100.0 && row.watts.contains(node)) {
        pts[row.bitrate_mbps] = row.watts.at(node);
      }
    }
    if (pts.empty()) {
      throw CalibrationError("no bitrate curve for node " + node);
    }
    return interp(pts, bitrate_mbps);
  }

 private:
  void require_e2e(Scenario sc, double bw, double b) const {
    const E2eRow* row = find_e2e(sc, bw, b);
    if (row == nullptr) {
      throw CalibrationError(std::string("calibration row missing: ") +
                             to_string(sc) + " @ " + std::to_string(b) +
                             " Mbps / " + std::to_string(bw) + " MHz");
    }
    const bool wants_ue2 = sc == Scenario::k2ActiveUEs;
    for (const char* node : kNodes) {
      if (std::string(node) == "ue2" && !wants_ue2) {
        continue;
      }
      if (!row->watts.contains(node)) {
        throw CalibrationError(std::string("node ") + node +
                               " missing from row " + to_string(sc));
      }
    }
  }

  static double interp(const std::map<double, double>& pts, double x) {
    if (pts.size() == 1) {
      return pts.begin()->second;
    }
    auto hi = pts.lower_bound(x);
    if (hi == pts.begin()) {
      return hi->second;
    }
    if (hi == pts.end()) {
      return std::prev(hi)->second;
    }
    const auto lo = std::prev(hi);
    const double w = (x - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
  }

  ComparisonRow interp_cmp(double bitrate_mbps) const {
    std::map<double, double> hw, host, cont;
    for (const auto& [b, row] : cmp_active) {
      hw[b] = row.hardware;
      host[b] = row.host;
      cont[b] = row.container;
    }
    if (hw.empty()) {
      throw CalibrationError("comparison table has no active rows");
    }
    return ComparisonRow{interp(hw, bitrate_mbps), interp(host, bitrate_mbps),
                         interp(cont, bitrate_mbps)};
  }
};

// ============================================================================
// JSON loading
// ============================================================================

namespace detail {

inline double get_number(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw CalibrationError(std::string("calibration field missing or not a "
                                       "number: ") +
                           key);
  }
  return it->get<double>();
}

inline std::map<std::string, double> get_watts(const nlohmann::json& j) {
  std::map<std::string, double> out;
  for (const auto& [node, v] : j.items()) {
    if (!v.is_number()) {
      throw CalibrationError("watts entry for " + node + " is not a number");
    }
    out[node] = v.get<double>();
  }
  return out;
}

}  // namespace detail

inline CalibrationTable CalibrationTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw CalibrationError("calibration document must be a JSON object");
  }
  CalibrationTable t;
  try {
    t.version = j.at("version").get<std::string>();
    t.epoch_ms = j.at("epoch_ms").get<std::int64_t>();

    const auto& e2e = j.at("e2e");
    t.e2e_idle = detail::get_watts(e2e.at("idle").at("watts"));
    for (const auto& row_j : e2e.at("active")) {
      E2eRow row;
      row.scenario =
          scenario_from_string(row_j.at("scenario").get<std::string>());
      row.bandwidth_mhz = detail::get_number(row_j, "bandwidth_mhz");
      row.bitrate_mbps = detail::get_number(row_j, "bitrate_mbps");
      row.watts = detail::get_watts(row_j.at("watts"));
      t.e2e_active.push_back(std::move(row));
    }

    const auto& cmp = j.at("comparison");
    t.cmp_idle = ComparisonRow{detail::get_number(cmp.at("idle"), "hardware"),
                               detail::get_number(cmp.at("idle"), "host"),
                               detail::get_number(cmp.at("idle"), "container")};
    for (const auto& row_j : cmp.at("active")) {
      const double b = detail::get_number(row_j, "bitrate_mbps");
      t.cmp_active[b] =
          ComparisonRow{detail::get_number(row_j, "hardware"),
                        detail::get_number(row_j, "host"),
                        detail::get_number(row_j, "container")};
    }

    const auto& sw = j.at("software_model");
    t.sw.counter_floor_w = detail::get_number(sw, "counter_floor_w");
    t.sw.attribution_baseline_w =
        detail::get_number(sw, "attribution_baseline_w");
    t.sw.gap_fit_bitrate_mbps = detail::get_number(sw, "gap_fit_bitrate_mbps");
    t.sw.gpu_power_idle_w = detail::get_number(sw, "gpu_power_idle_w");
    t.sw.gpu_power_active_w = detail::get_number(sw, "gpu_power_active_w");
    t.sw.gpu_util_idle = detail::get_number(sw, "gpu_util_idle");
    t.sw.gpu_util_active = detail::get_number(sw, "gpu_util_active");
    t.sw.renderer_gpu_share_idle =
        detail::get_number(sw, "renderer_gpu_share_idle");
    t.sw.renderer_gpu_share_active =
        detail::get_number(sw, "renderer_gpu_share_active");
    t.sw.cpu_count = static_cast<int>(detail::get_number(sw, "cpu_count"));
    t.sw.busy_fraction_idle = detail::get_number(sw, "busy_fraction_idle");
    t.sw.busy_fraction_active = detail::get_number(sw, "busy_fraction_active");
    t.sw.renderer_pid = static_cast<int>(detail::get_number(sw, "renderer_pid"));
    t.sw.background_pid =
        static_cast<int>(detail::get_number(sw, "background_pid"));
    t.sw.renderer_container = sw.at("renderer_container").get<std::string>();

    const auto& noise = j.at("noise");
    t.noise.hardware_sigma_w = detail::get_number(noise, "hardware_sigma_w");
    t.noise.host_sigma_w = detail::get_number(noise, "host_sigma_w");
    t.noise.container_sigma_w = detail::get_number(noise, "container_sigma_w");
    t.noise.gpu_sigma_w = detail::get_number(noise, "gpu_sigma_w");
    t.noise.sigma_reference_w = detail::get_number(noise, "sigma_reference_w");
    t.noise.sigma_scale_min = detail::get_number(noise, "sigma_scale_min");
    t.noise.spike_rate_hz = detail::get_number(noise, "spike_rate_hz");
    t.noise.spike_amp_min_w = detail::get_number(noise, "spike_amp_min_w");
    t.noise.spike_amp_max_w = detail::get_number(noise, "spike_amp_max_w");
    t.noise.spike_width_min_ticks =
        static_cast<int>(detail::get_number(noise, "spike_width_min_ticks"));
    t.noise.spike_width_max_ticks =
        static_cast<int>(detail::get_number(noise, "spike_width_max_ticks"));
  } catch (const nlohmann::json::exception& e) {
    throw CalibrationError(std::string("bad calibration document: ") +
                           e.what());
  }
  t.validate();
  return t;
}

inline CalibrationTable CalibrationTable::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw CalibrationError("cannot open calibration file " + path.string());
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw CalibrationError("calibration file is not valid JSON: " +
                           path.string());
  }
  return from_json(j);
}

}  // namespace wattbed::sim

// Generated at build time from data/calibration.json.
#include "wattbed/sim/calibration_data.hpp"

namespace wattbed::sim {

inline CalibrationTable CalibrationTable::builtin() {
  return from_json(nlohmann::json::parse(kBuiltinCalibrationJson));
}

}  // namespace wattbed::sim
