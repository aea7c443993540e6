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

#include <chrono>
#include <iostream>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace wattbed {

/// Line-delimited structured log records on stderr. Every record carries the
/// experiment and scenario tags so runs can be grepped apart.
class JsonlLogger {
 public:
  static JsonlLogger& instance() {
    static JsonlLogger logger;
    return logger;
  }

  void set_quiet(bool quiet) { quiet_ = quiet; }

  void event(std::string_view level, std::string_view message,
             nlohmann::json fields = {}) {
    if (quiet_) {
      return;
    }
    nlohmann::json record = std::move(fields);
    record["level"] = level;
    record["msg"] = message;
    record["ts_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
    std::lock_guard<std::mutex> lock(mu_);
    std::cerr << record.dump() << "\n";
  }

 private:
  std::mutex mu_;
  bool quiet_ = false;
};

inline void log_info(std::string_view message, nlohmann::json fields = {}) {
  JsonlLogger::instance().event("info", message, std::move(fields));
}

inline void log_warn(std::string_view message, nlohmann::json fields = {}) {
  JsonlLogger::instance().event("warn", message, std::move(fields));
}

inline void log_error(std::string_view message, nlohmann::json fields = {}) {
  JsonlLogger::instance().event("error", message, std::move(fields));
}

}  // namespace wattbed
