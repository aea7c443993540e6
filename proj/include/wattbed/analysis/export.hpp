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
// Trace export: writes aligned series as CSV, one file per series plus a
// combined file, in a shape the replay path can re-import losslessly.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wattbed/collector/csvio.hpp"
#include "wattbed/collector/series.hpp"
#include "wattbed/common/log.hpp"

namespace wattbed::analysis {

/// File-name stem for one series: "<node>-<source>" with characters that are
/// awkward in file names replaced.
inline std::string series_file_stem(const std::string& node_id,
                                    const std::string& source) {
  std::string stem = node_id + "-" + source;
  for (char& c : stem) {
    if (c == ':' || c == '/' || c == '\\') {
      c = '-';
    }
  }
  return stem;
}

/// Writes every series to `dir`: one "<node>-<source>.csv" per series and a
/// "combined.csv" holding all of them. An empty input produces no files and
/// logs a warning. Returns the paths written.
inline std::vector<std::filesystem::path> export_trace(
    const std::vector<collector::PowerSeries>& series,
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  if (series.empty()) {
    log_warn("export requested but no series are present",
             {{"dir", dir.string()}});
    return written;
  }
  std::filesystem::create_directories(dir);
  for (const auto& s : series) {
    const std::filesystem::path p =
        dir / (series_file_stem(s.node_id, s.source) + ".csv");
    collector::write_csv(p, {s});
    written.push_back(p);
  }
  const std::filesystem::path combined = dir / "combined.csv";
  collector::write_csv(combined, series);
  written.push_back(combined);
  return written;
}

/// Reads back a combined export. The result is sample-for-sample identical
/// to what was exported.
inline std::vector<collector::PowerSeries> import_trace(
    const std::filesystem::path& dir) {
  return collector::read_csv(dir / "combined.csv");
}

}  // namespace wattbed::analysis
