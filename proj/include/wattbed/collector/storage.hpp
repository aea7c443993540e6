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
// Embedded time-series store: one append-only text segment per (node, source)
// series under a directory, mirrored by an in-memory index for fast range
// queries. Reopening the directory replays every segment.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wattbed/collector/series.hpp"
#include "wattbed/common/numformat.hpp"

namespace wattbed::collector {

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfOrderAppend : public StorageError {
 public:
  using StorageError::StorageError;
};

/// Identifies one stored series.
struct SeriesKey {
  std::string node_id;
  std::string source;

  bool operator<(const SeriesKey& o) const {
    return node_id != o.node_id ? node_id < o.node_id : source < o.source;
  }
  bool operator==(const SeriesKey&) const = default;
};

namespace detail {

/// Filename-safe encoding: alnum plus '-', '_', '.' pass through, everything
/// else becomes %XX.
inline std::string encode_component(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

inline std::string decode_component(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(
          std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace detail

/// Time-series store rooted at one directory. Concurrent appends to distinct
/// series proceed in parallel; a series has a single writer at a time and
/// readers always see a consistent prefix.
class SeriesStore {
 public:
  explicit SeriesStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
      throw StorageError("cannot create store directory " + dir_.string() +
                         ": " + ec.message());
    }
    replay();
  }

  ~SeriesStore() { flush_all(); }

  SeriesStore(const SeriesStore&) = delete;
  SeriesStore& operator=(const SeriesStore&) = delete;

  /// Appends one sample; timestamps must be strictly increasing per series.
  void append(const SeriesKey& key, const RawSample& sample) {
    Cell& cell = cell_for(key);
    std::lock_guard<std::mutex> lock(cell.mu);
    if (!cell.samples.empty() &&
        sample.timestamp_ms <= cell.samples.back().timestamp_ms) {
      throw OutOfOrderAppend(
          "append at " + std::to_string(sample.timestamp_ms) +
          " not after last " +
          std::to_string(cell.samples.back().timestamp_ms) + " for " +
          key.node_id + "/" + key.source);
    }
    if (!cell.out.is_open()) {
      open_segment(key, cell);
    }
    cell.out << format_int(sample.timestamp_ms) << ' '
             << format_double(sample.power_w) << '\n';
    if (!cell.out) {
      throw StorageError("write failed for " + key.node_id + "/" +
                         key.source);
    }
    cell.samples.push_back(sample);
  }

  /// Samples with from_ms <= timestamp <= to_ms, in append order.
  std::vector<RawSample> query_range(const SeriesKey& key,
                                     std::int64_t from_ms,
                                     std::int64_t to_ms) const {
    const Cell* cell = find_cell(key);
    if (cell == nullptr) {
      return {};
    }
    std::lock_guard<std::mutex> lock(cell->mu);
    const auto lo = std::lower_bound(
        cell->samples.begin(), cell->samples.end(), from_ms,
        [](const RawSample& s, std::int64_t t) { return s.timestamp_ms < t; });
    const auto hi = std::upper_bound(
        cell->samples.begin(), cell->samples.end(), to_ms,
        [](std::int64_t t, const RawSample& s) { return t < s.timestamp_ms; });
    return {lo, hi};
  }

  std::vector<SeriesKey> list_series() const {
    std::lock_guard<std::mutex> lock(map_mu_);
    std::vector<SeriesKey> keys;
    keys.reserve(cells_.size());
    for (const auto& [k, _] : cells_) {
      keys.push_back(k);
    }
    return keys;
  }

  std::size_t sample_count(const SeriesKey& key) const {
    const Cell* cell = find_cell(key);
    if (cell == nullptr) {
      return 0;
    }
    std::lock_guard<std::mutex> lock(cell->mu);
    return cell->samples.size();
  }

  /// Pushes buffered writes to the filesystem. Called on destruction; call
  /// explicitly before handing the directory to another process.
  void flush_all() {
    std::lock_guard<std::mutex> map_lock(map_mu_);
    for (auto& [_, cell] : cells_) {
      std::lock_guard<std::mutex> lock(cell->mu);
      if (cell->out.is_open()) {
        cell->out.flush();
      }
    }
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  struct Cell {
    mutable std::mutex mu;
    std::vector<RawSample> samples;
    std::ofstream out;
  };

  static std::string file_name(const SeriesKey& key) {
    return detail::encode_component(key.node_id) + "@" +
           detail::encode_component(key.source) + ".series";
  }

  Cell& cell_for(const SeriesKey& key) {
    std::lock_guard<std::mutex> lock(map_mu_);
    auto it = cells_.find(key);
    if (it == cells_.end()) {
      it = cells_.emplace(key, std::make_unique<Cell>()).first;
    }
    return *it->second;
  }

  const Cell* find_cell(const SeriesKey& key) const {
    std::lock_guard<std::mutex> lock(map_mu_);
    const auto it = cells_.find(key);
    return it == cells_.end() ? nullptr : it->second.get();
  }

  // Caller holds cell.mu.
  void open_segment(const SeriesKey& key, Cell& cell) {
    const auto path = dir_ / file_name(key);
    const bool fresh = !std::filesystem::exists(path);
    cell.out.open(path, std::ios::app);
    if (!cell.out) {
      throw StorageError("cannot open segment " + path.string());
    }
    if (fresh) {
      cell.out << "# series " << key.node_id << ' ' << key.source << '\n';
    }
  }

  void replay() {
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (!entry.is_regular_file() ||
          entry.path().extension() != ".series") {
        continue;
      }
      const std::string stem = entry.path().stem().string();
      const auto sep = stem.find('@');
      if (sep == std::string::npos) {
        continue;
      }
      SeriesKey key{detail::decode_component(stem.substr(0, sep)),
                    detail::decode_component(stem.substr(sep + 1))};
      auto cell = std::make_unique<Cell>();
      std::ifstream in(entry.path());
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
          continue;
        }
        const auto space = line.find(' ');
        if (space == std::string::npos) {
          throw StorageError("corrupt segment " + entry.path().string());
        }
        RawSample s;
        s.timestamp_ms = parse_int64(line.substr(0, space));
        s.power_w = parse_double(line.substr(space + 1));
        if (!cell->samples.empty() &&
            s.timestamp_ms <= cell->samples.back().timestamp_ms) {
          throw StorageError("non-monotone segment " + entry.path().string());
        }
        cell->samples.push_back(s);
      }
      cells_.emplace(std::move(key), std::move(cell));
    }
  }

  std::filesystem::path dir_;
  mutable std::mutex map_mu_;
  std::map<SeriesKey, std::unique_ptr<Cell>> cells_;
};

}  // namespace wattbed::collector
