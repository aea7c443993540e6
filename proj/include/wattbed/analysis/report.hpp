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
// Turns stored runs into the result set: per-series summaries, the edge
// comparison (wall vs host vs pod, with increases and underestimation), the
// end-to-end per-node view with totals, and renderer-toggle step levels.
// The report document is fully determined by its inputs: no clocks, no
// paths, keys in fixed order, so identical runs give identical bytes.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wattbed/analysis/stats.hpp"
#include "wattbed/collector/series.hpp"
#include "wattbed/common/numformat.hpp"
#include "wattbed/sim/scenario.hpp"

namespace wattbed::analysis {

inline constexpr const char* kReportSchema = "wattbed.report.v1";

/// One stored run handed to the report builder: its configuration and the
/// aligned series recovered from storage.
struct RunData {
  sim::ScenarioConfig config;
  std::vector<collector::PowerSeries> series;
};

struct ReportOptions {
  double warmup_s = kDefaultWarmupS;
  std::string calibration_version;
};

struct EnergyReport {
  nlohmann::ordered_json doc;

  std::string to_string() const { return doc.dump(2) + "\n"; }
};

namespace detail {

inline const collector::PowerSeries* find_series(const RunData& run,
                                                 const std::string& node,
                                                 const std::string& source) {
  for (const auto& s : run.series) {
    if (s.node_id == node && s.source == source) {
      return &s;
    }
  }
  return nullptr;
}

/// The run's container source name ("container:<pod>"); runs here carry one
/// attributed pod.
inline std::optional<std::string> container_source_of(const RunData& run) {
  std::optional<std::string> found;
  for (const auto& s : run.series) {
    if (s.source.rfind(collector::kContainerPrefix, 0) == 0) {
      if (!found.has_value() || s.source < *found) {
        found = s.source;
      }
    }
  }
  return found;
}

inline nlohmann::ordered_json stats_json(const SummaryStats& st) {
  nlohmann::ordered_json j;
  j["mean_w"] = st.mean_w;
  j["std_w"] = st.std_w;
  j["n"] = st.n;
  j["coverage"] = st.coverage;
  j["degraded"] = st.degraded();
  return j;
}

inline collector::PowerSeries slice(const collector::PowerSeries& s,
                                    double from_s, double to_s) {
  collector::PowerSeries out;
  out.node_id = s.node_id;
  out.source = s.source;
  for (const auto& p : s.samples) {
    if (p.t_rel_s >= from_s && p.t_rel_s < to_s) {
      out.samples.push_back(p);
    }
  }
  return out;
}

struct RunSummary {
  std::string id;
  const RunData* run = nullptr;
  std::map<std::pair<std::string, std::string>, SummaryStats> stats;
  std::optional<std::string> container_source;

  const SummaryStats* get(const std::string& node,
                          const std::string& source) const {
    const auto it = stats.find({node, source});
    return it == stats.end() ? nullptr : &it->second;
  }
};

}  // namespace detail

/// Validates the structural schema of a report document; throws
/// AnalysisError on any violation.
inline void validate_report(const nlohmann::json& doc) {
  const auto need = [&](const nlohmann::json& j, const char* key,
                        const char* ctx) -> const nlohmann::json& {
    const auto it = j.find(key);
    if (it == j.end()) {
      throw AnalysisError(std::string("report missing ") + ctx + "." + key);
    }
    return *it;
  };
  if (!doc.is_object()) {
    throw AnalysisError("report must be a JSON object");
  }
  if (need(doc, "schema", "$") != kReportSchema) {
    throw AnalysisError("unknown report schema");
  }
  need(doc, "metadata", "$");
  need(doc["metadata"], "warmup_s", "metadata");
  need(doc["metadata"], "std_kind", "metadata");
  const auto& runs = need(doc, "runs", "$");
  if (!runs.is_array()) {
    throw AnalysisError("report runs must be an array");
  }
  for (const auto& run : runs) {
    need(run, "id", "runs[]");
    need(run, "config", "runs[]");
    const auto& series = need(run, "series", "runs[]");
    if (!series.is_object()) {
      throw AnalysisError("runs[].series must be an object");
    }
    for (const auto& [key, st] : series.items()) {
      for (const char* field : {"mean_w", "std_w", "n", "coverage"}) {
        if (!st.contains(field) || !st[field].is_number()) {
          throw AnalysisError("series " + key + " missing numeric " + field);
        }
      }
    }
  }
  for (const char* section : {"comparison", "e2e"}) {
    if (doc.contains(section) && !doc[section].is_object() &&
        !doc[section].is_null()) {
      throw AnalysisError(std::string(section) + " must be object or null");
    }
  }
  if (doc.contains("toggle") && !doc["toggle"].is_array()) {
    throw AnalysisError("toggle must be an array");
  }
  const auto& warnings = need(doc, "warnings", "$");
  if (!warnings.is_array()) {
    throw AnalysisError("warnings must be an array");
  }
}

inline EnergyReport build_report(const std::vector<RunData>& runs,
                                 const ReportOptions& opt = {}) {
  using nlohmann::ordered_json;

  std::vector<detail::RunSummary> sums;
  for (const auto& run : runs) {
    detail::RunSummary rs;
    rs.id = sim::run_id(run.config);
    rs.run = &run;
    rs.container_source = detail::container_source_of(run);
    for (const auto& s : run.series) {
      rs.stats[{s.node_id, s.source}] = summarize(s, opt.warmup_s);
    }
    sums.push_back(std::move(rs));
  }
  std::sort(sums.begin(), sums.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < sums.size(); ++i) {
    if (sums[i].id == sums[i - 1].id) {
      throw AnalysisError("duplicate run id: " + sums[i].id);
    }
  }

  std::vector<std::string> warnings;
  ordered_json doc;
  doc["schema"] = kReportSchema;
  ordered_json meta;
  meta["calibration_version"] = opt.calibration_version;
  meta["warmup_s"] = opt.warmup_s;
  meta["std_kind"] = "population";
  doc["metadata"] = std::move(meta);

  // ----------------------------------------------------------------- runs --
  ordered_json runs_j = ordered_json::array();
  for (const auto& rs : sums) {
    ordered_json r;
    r["id"] = rs.id;
    r["config"] = sim::to_json(rs.run->config);
    ordered_json series_j;
    std::map<std::string, double> hw_means;
    for (const auto& [key, st] : rs.stats) {
      series_j[key.first + "/" + key.second] = detail::stats_json(st);
      if (key.second == collector::kSourceHardware) {
        hw_means[key.first] = st.mean_w;
      }
    }
    r["series"] = std::move(series_j);
    if (rs.run->config.campaign == sim::Campaign::kE2e && !hw_means.empty()) {
      const E2eTotal tot = e2e_total(hw_means);
      ordered_json t;
      t["total_w"] = tot.total_w;
      t["partial"] = tot.partial;
      t["missing"] = tot.missing;
      r["e2e_total"] = std::move(t);
    }
    runs_j.push_back(std::move(r));
  }
  doc["runs"] = std::move(runs_j);

  const auto is_toggle = [](const detail::RunSummary& rs) {
    return rs.run->config.renderer_toggle_at_s.has_value();
  };

  // ----------------------------------------------------------- comparison --
  const detail::RunSummary* cmp_idle = nullptr;
  std::vector<const detail::RunSummary*> cmp_active;
  for (const auto& rs : sums) {
    if (rs.run->config.campaign != sim::Campaign::kComparison ||
        is_toggle(rs)) {
      continue;
    }
    if (rs.run->config.scenario == sim::Scenario::kIdleUEs) {
      cmp_idle = &rs;
    } else {
      cmp_active.push_back(&rs);
    }
  }
  std::sort(cmp_active.begin(), cmp_active.end(), [](auto* a, auto* b) {
    return a->run->config.bitrate_mbps.value_or(0.0) <
           b->run->config.bitrate_mbps.value_or(0.0);
  });

  const auto cmp_triple = [&](const detail::RunSummary& rs, double out[3]) {
    const SummaryStats* hw = rs.get("edge", collector::kSourceHardware);
    const SummaryStats* host = rs.get("edge", collector::kSourceHost);
    const SummaryStats* cont =
        rs.container_source.has_value()
            ? rs.get("edge", *rs.container_source)
            : nullptr;
    if (hw == nullptr || host == nullptr || cont == nullptr) {
      return false;
    }
    out[0] = hw->mean_w;
    out[1] = host->mean_w;
    out[2] = cont->mean_w;
    return true;
  };

  if (cmp_idle != nullptr || !cmp_active.empty()) {
    ordered_json cmp;
    double idle_v[3] = {0, 0, 0};
    const bool have_idle =
        cmp_idle != nullptr && cmp_triple(*cmp_idle, idle_v);
    if (have_idle) {
      ordered_json idle_j;
      idle_j["run"] = cmp_idle->id;
      idle_j["hardware_w"] = idle_v[0];
      idle_j["host_w"] = idle_v[1];
      idle_j["container_w"] = idle_v[2];
      idle_j["underestimation_pct"] = underestimation(idle_v[0], idle_v[1]);
      idle_j["container_share_pct"] = share(idle_v[2], idle_v[1]);
      cmp["idle"] = std::move(idle_j);
    } else {
      cmp["idle"] = nullptr;
      warnings.push_back(
          "comparison idle run missing; increase columns unavailable");
    }
    ordered_json rows = ordered_json::array();
    for (const auto* rs : cmp_active) {
      double v[3];
      if (!cmp_triple(*rs, v)) {
        warnings.push_back("run " + rs->id + " lacks edge sources; skipped");
        continue;
      }
      ordered_json row;
      row["run"] = rs->id;
      row["bitrate_mbps"] = rs->run->config.bitrate_mbps.value_or(0.0);
      row["hardware_w"] = v[0];
      row["host_w"] = v[1];
      row["container_w"] = v[2];
      if (have_idle) {
        row["hardware_increase_pct"] = percent_increase(v[0], idle_v[0]);
        row["host_increase_pct"] = percent_increase(v[1], idle_v[1]);
        row["container_increase_pct"] = percent_increase(v[2], idle_v[2]);
      } else {
        row["hardware_increase_pct"] = nullptr;
        row["host_increase_pct"] = nullptr;
        row["container_increase_pct"] = nullptr;
      }
      row["underestimation_pct"] = underestimation(v[0], v[1]);
      row["container_share_pct"] = share(v[2], v[1]);
      rows.push_back(std::move(row));
    }
    cmp["active"] = std::move(rows);
    doc["comparison"] = std::move(cmp);
  } else {
    doc["comparison"] = nullptr;
  }

  // ------------------------------------------------------------------ e2e --
  const detail::RunSummary* e2e_idle_run = nullptr;
  std::vector<const detail::RunSummary*> e2e_active_runs;
  for (const auto& rs : sums) {
    if (rs.run->config.campaign != sim::Campaign::kE2e || is_toggle(rs)) {
      continue;
    }
    if (rs.run->config.scenario == sim::Scenario::kIdleUEs) {
      e2e_idle_run = &rs;
    } else {
      e2e_active_runs.push_back(&rs);
    }
  }
  std::sort(e2e_active_runs.begin(), e2e_active_runs.end(),
            [](auto* a, auto* b) {
              const auto key = [](const sim::ScenarioConfig& c) {
                return std::make_tuple(sim::active_ue_count(c.scenario),
                                       c.bandwidth_mhz,
                                       c.bitrate_mbps.value_or(0.0));
              };
              return key(a->run->config) < key(b->run->config);
            });

  const auto hw_mean_map = [](const detail::RunSummary& rs) {
    std::map<std::string, double> m;
    for (const auto& [key, st] : rs.stats) {
      if (key.second == collector::kSourceHardware) {
        m[key.first] = st.mean_w;
      }
    }
    return m;
  };

  if (e2e_idle_run != nullptr || !e2e_active_runs.empty()) {
    ordered_json e2e;
    std::map<std::string, double> idle_means;
    if (e2e_idle_run != nullptr) {
      idle_means = hw_mean_map(*e2e_idle_run);
      ordered_json idle_j;
      idle_j["run"] = e2e_idle_run->id;
      ordered_json watts;
      for (const auto& [node, w] : idle_means) {
        watts[node] = w;
      }
      idle_j["watts"] = std::move(watts);
      const E2eTotal tot = e2e_total(idle_means);
      idle_j["total_w"] = tot.total_w;
      idle_j["partial"] = tot.partial;
      e2e["idle"] = std::move(idle_j);
    } else {
      e2e["idle"] = nullptr;
      warnings.push_back(
          "e2e idle run missing; increase columns unavailable");
    }
    ordered_json rows = ordered_json::array();
    for (const auto* rs : e2e_active_runs) {
      const std::map<std::string, double> means = hw_mean_map(*rs);
      ordered_json row;
      row["run"] = rs->id;
      row["scenario"] = sim::to_string(rs->run->config.scenario);
      row["bandwidth_mhz"] = rs->run->config.bandwidth_mhz;
      row["bitrate_mbps"] = rs->run->config.bitrate_mbps.value_or(0.0);
      ordered_json watts;
      for (const auto& [node, w] : means) {
        watts[node] = w;
      }
      row["watts"] = std::move(watts);
      const E2eTotal tot = e2e_total(means);
      row["total_w"] = tot.total_w;
      row["partial"] = tot.partial;
      row["missing"] = tot.missing;
      ordered_json incr;
      for (const auto& [node, w] : means) {
        if (const auto it = idle_means.find(node);
            it != idle_means.end()) {
          incr[node] = percent_increase(w, it->second);
        } else {
          incr[node] = nullptr;
        }
      }
      row["increase_vs_idle_pct"] = std::move(incr);
      const SummaryStats* host = rs->get("edge", collector::kSourceHost);
      const SummaryStats* cont =
          rs->container_source.has_value()
              ? rs->get("edge", *rs->container_source)
              : nullptr;
      if (host != nullptr && cont != nullptr) {
        ordered_json sw;
        sw["host_w"] = host->mean_w;
        sw["container_w"] = cont->mean_w;
        row["edge_software"] = std::move(sw);
      }
      rows.push_back(std::move(row));
    }
    e2e["active"] = std::move(rows);
    doc["e2e"] = std::move(e2e);
  } else {
    doc["e2e"] = nullptr;
  }

  // --------------------------------------------------------------- toggle --
  ordered_json toggles = ordered_json::array();
  for (const auto& rs : sums) {
    if (!is_toggle(rs)) {
      continue;
    }
    const collector::PowerSeries* edge_hw =
        detail::find_series(*rs.run, "edge", collector::kSourceHardware);
    if (edge_hw == nullptr) {
      warnings.push_back("toggle run " + rs.id + " lacks edge hardware");
      continue;
    }
    const double at = *rs.run->config.renderer_toggle_at_s;
    const SummaryStats off = summarize(
        detail::slice(*edge_hw, 0.0, at), opt.warmup_s);
    const SummaryStats on = summarize(
        detail::slice(*edge_hw, at + opt.warmup_s,
                      rs.run->config.duration_s + 1.0),
        0.0);
    ordered_json t;
    t["run"] = rs.id;
    t["toggle_at_s"] = at;
    t["off_w"] = off.mean_w;
    t["on_w"] = on.mean_w;
    t["increase_pct"] = percent_increase(on.mean_w, off.mean_w);
    toggles.push_back(std::move(t));
  }
  doc["toggle"] = std::move(toggles);

  doc["warnings"] = warnings;
  EnergyReport report;
  report.doc = std::move(doc);
  validate_report(report.doc);
  return report;
}

// ============================================================================
// Rendered tables
// ============================================================================

namespace detail {

inline std::string watts2(const nlohmann::json& v) {
  return v.is_number() ? format_fixed(v.get<double>(), 2) : "n/a";
}

inline std::string pct2(const nlohmann::json& v) {
  if (!v.is_number()) {
    return "n/a";
  }
  const double x = v.get<double>();
  return (x >= 0.0 ? "+" : "") + format_fixed(x, 2) + "%";
}

inline std::string pad(std::string s, std::size_t width) {
  while (s.size() < width) {
    s += ' ';
  }
  return s;
}

}  // namespace detail

/// Renders the per-table text files from a report document. Only tables whose
/// sections exist are produced; keys are target file names.
inline std::map<std::string, std::string> render_tables(
    const nlohmann::json& doc) {
  using detail::pad;
  using detail::pct2;
  using detail::watts2;
  std::map<std::string, std::string> out;

  if (doc.contains("comparison") && doc["comparison"].is_object()) {
    const auto& cmp = doc["comparison"];
    if (cmp.contains("idle") && cmp["idle"].is_object()) {
      const auto& idle = cmp["idle"];
      std::string t;
      t += "Average edge power while idle, by measurement path (W)\n";
      t += "\n";
      t += "  Hardware (wall meter)   " + watts2(idle["hardware_w"]) + "\n";
      t += "  Host OS                 " + watts2(idle["host_w"]) + "\n";
      t += "  Remote renderer pod     " + watts2(idle["container_w"]) + "\n";
      t += "\n";
      t += "  Host vs hardware        " + pct2(idle["underestimation_pct"]) +
           "\n";
      t += "  Pod share of host       " +
           format_fixed(idle["container_share_pct"].get<double>(), 2) + "%\n";
      out["table1.txt"] = std::move(t);
    }
    if (cmp.contains("active") && cmp["active"].is_array() &&
        !cmp["active"].empty()) {
      std::string t;
      t += "Average edge power while streaming, by measurement path (W, "
           "increase vs idle)\n";
      t += "\n";
      t += "  " + pad("bitrate", 10) + pad("hardware (wall)", 22) +
           pad("host OS", 22) + "renderer pod\n";
      for (const auto& row : cmp["active"]) {
        const auto cell = [&](const char* w, const char* p) {
          return watts2(row[w]) + " (" + pct2(row[p]) + ")";
        };
        t += "  " +
             pad(format_fixed(row["bitrate_mbps"].get<double>(), 0) + " Mbps",
                 10) +
             pad(cell("hardware_w", "hardware_increase_pct"), 22) +
             pad(cell("host_w", "host_increase_pct"), 22) +
             cell("container_w", "container_increase_pct") + "\n";
      }
      out["table2.txt"] = std::move(t);
    }
  }

  if (doc.contains("e2e") && doc["e2e"].is_object()) {
    const auto& e2e = doc["e2e"];
    const auto node_row = [](const nlohmann::json& watts) {
      std::string r;
      for (const char* node : sim::kNodes) {
        if (!r.empty()) {
          r += " / ";
        }
        r += watts.contains(node) ? watts2(watts[node]) : "n/a";
      }
      return r;
    };
    if (e2e.contains("idle") && e2e["idle"].is_object()) {
      const auto& idle = e2e["idle"];
      std::string t;
      t += "Average idle power per node (W)\n";
      t += "\n";
      t += "  core / gnodeb / edge / ue1 / ue2\n";
      t += "  " + node_row(idle["watts"]) + "\n";
      t += "\n";
      t += "  total " + watts2(idle["total_w"]) + "\n";
      out["table3.txt"] = std::move(t);
    }
    if (e2e.contains("active") && e2e["active"].is_array() &&
        !e2e["active"].empty()) {
      std::string t;
      t += "Average active power per node (W)\n";
      t += "\n";
      t += "  " + pad("scenario", 14) + pad("bw", 9) + pad("bitrate", 10) +
           pad("core / gnodeb / edge / ue1 / ue2", 42) + "total\n";
      for (const auto& row : e2e["active"]) {
        std::string total = watts2(row["total_w"]);
        if (row["partial"].get<bool>()) {
          total += " (partial)";
        }
        t += "  " + pad(row["scenario"].get<std::string>(), 14) +
             pad(format_fixed(row["bandwidth_mhz"].get<double>(), 0) + " MHz",
                 9) +
             pad(format_fixed(row["bitrate_mbps"].get<double>(), 0) + " Mbps",
                 10) +
             pad(node_row(row["watts"]), 42) + total + "\n";
      }
      out["table4.txt"] = std::move(t);
    }
  }
  return out;
}

}  // namespace wattbed::analysis
