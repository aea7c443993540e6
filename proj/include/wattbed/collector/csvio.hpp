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
// CSV trace interchange. Header is fixed: node,source,t_rel_s,power_w.
// Numeric fields use shortest round-trip formatting so an exported file
// re-imports to the identical series.

#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wattbed/collector/series.hpp"
#include "wattbed/common/numformat.hpp"

namespace wattbed::collector {

inline constexpr const char* kCsvHeader = "node,source,t_rel_s,power_w";

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string to_csv(const std::vector<PowerSeries>& series) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& s : series) {
    for (const auto& p : s.samples) {
      out += s.node_id;
      out += ',';
      out += s.source;
      out += ',';
      out += format_double(p.t_rel_s);
      out += ',';
      out += format_double(p.power_w);
      out += '\n';
    }
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path,
                      const std::vector<PowerSeries>& series) {
  std::ofstream out(path);
  if (!out) {
    throw CsvError("cannot open " + path.string() + " for writing");
  }
  out << to_csv(series);
  if (!out) {
    throw CsvError("write failed for " + path.string());
  }
}

/// Parses series back from CSV, grouping consecutive rows by (node, source)
/// in file order. Node ids and sources must not contain commas, which the
/// writer never produces.
inline std::vector<PowerSeries> from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw CsvError("missing or wrong CSV header, expected '" +
                   std::string(kCsvHeader) + "'");
  }
  std::vector<PowerSeries> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::array<std::string, 4> field;
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
      const std::size_t comma = line.find(',', start);
      const bool last = i == 3;
      if (last != (comma == std::string::npos)) {
        throw CsvError("line " + std::to_string(line_no) +
                       ": expected 4 fields");
      }
      field[i] = line.substr(start, last ? std::string::npos : comma - start);
      start = comma + 1;
    }
    SeriesPoint p;
    try {
      p.t_rel_s = parse_double(field[2]);
      p.power_w = parse_double(field[3]);
    } catch (const std::exception& e) {
      throw CsvError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (out.empty() || out.back().node_id != field[0] ||
        out.back().source != field[1]) {
      out.push_back(PowerSeries{field[0], field[1], {}});
    }
    out.back().samples.push_back(p);
  }
  return out;
}

inline std::vector<PowerSeries> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw CsvError("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str());
}

}  // namespace wattbed::collector
