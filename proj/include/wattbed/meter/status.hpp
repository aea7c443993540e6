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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace wattbed::meter {

// ============================================================================
// Errors
// ============================================================================

enum class ParseErrorKind {
  kMalformedDocument,   // not parseable as JSON
  kSchemaViolation,     // missing/ill-typed required field, out-of-range value
  kInvariantViolation,  // fields parse but contradict the channel invariants
};

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ParseErrorKind kind() const { return kind_; }

 private:
  ParseErrorKind kind_;
};

inline const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kMalformedDocument:
      return "malformed-document";
    case ParseErrorKind::kSchemaViolation:
      return "schema-violation";
    case ParseErrorKind::kInvariantViolation:
      return "invariant-violation";
  }
  return "unknown";
}

// ============================================================================
// Wire types
// ============================================================================

/// One metered outlet. `load_w` is instantaneous active power, `energy_wh` a
/// cumulative counter. An off channel must read zero load and zero current.
struct OutputChannel {
  int id = 0;                 // >= 1, unique within a status
  std::string name;
  int state = 1;              // 1 = on, 0 = off
  double load_w = 0.0;
  double current_ma = 0.0;
  double power_factor = 1.0;  // [0, 1]
  double energy_wh = 0.0;     // non-decreasing across polls

  bool operator==(const OutputChannel&) const = default;
};

/// Full status document of the smart power socket.
struct MeterStatus {
  std::string device_name;
  std::int64_t time_ms = 0;
  double voltage_v = 230.0;
  double frequency_hz = 50.0;
  std::vector<OutputChannel> outputs;

  bool operator==(const MeterStatus&) const = default;
};

/// One hardware power reading mapped to a testbed node.
struct MeterSample {
  std::string node_id;  // core | gnodeb | edge | ue1 | ue2
  std::int64_t timestamp_ms = 0;
  double power_w = 0.0;
  double cumulative_energy_wh = 0.0;

  bool operator==(const MeterSample&) const = default;
};

// ============================================================================
// Validation
// ============================================================================

/// Throws ParseError on any invariant breach. Used both when constructing a
/// status for serving and when accepting one off the wire.
inline void validate_status(const MeterStatus& status) {
  if (!(status.voltage_v > 0.0)) {
    throw ParseError(ParseErrorKind::kSchemaViolation, "voltage must be > 0");
  }
  if (!(status.frequency_hz > 0.0)) {
    throw ParseError(ParseErrorKind::kSchemaViolation, "frequency must be > 0");
  }
  if (status.outputs.empty()) {
    throw ParseError(ParseErrorKind::kSchemaViolation, "outputs list is empty");
  }
  std::set<int> ids;
  for (const auto& ch : status.outputs) {
    if (ch.id < 1) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "channel id must be >= 1");
    }
    if (!ids.insert(ch.id).second) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "duplicate channel id " + std::to_string(ch.id));
    }
    if (ch.state != 0 && ch.state != 1) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "channel state must be 0 or 1");
    }
    if (ch.load_w < 0.0 || !std::isfinite(ch.load_w)) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "channel load must be finite and >= 0");
    }
    if (ch.current_ma < 0.0 || !std::isfinite(ch.current_ma)) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "channel current must be finite and >= 0");
    }
    if (ch.power_factor < 0.0 || ch.power_factor > 1.0 ||
        !std::isfinite(ch.power_factor)) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "power factor must be in [0, 1]");
    }
    if (ch.energy_wh < 0.0 || !std::isfinite(ch.energy_wh)) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "energy counter must be finite and >= 0");
    }
    if (ch.state == 0 && (ch.load_w != 0.0 || ch.current_ma != 0.0)) {
      throw ParseError(ParseErrorKind::kInvariantViolation,
                       "off channel must report zero load and current");
    }
  }
}

// ============================================================================
// Encoding / parsing
// ============================================================================

/// Energy counters travel as watt-hours rounded to 3 decimals.
inline double round_energy_wh(double energy_wh) {
  return std::round(energy_wh * 1000.0) / 1000.0;
}

/// Serializes a validated status to the device's JSON document:
///   {"Agent":{"DeviceName":...,"Time":...},
///    "GlobalMeasure":{"Voltage":...,"Frequency":...},
///    "Outputs":[{"ID":...,"Name":...,"State":...,"Load":...,"Current":...,
///                "PowerFactor":...,"Energy":...}]}
inline std::string encode_meter_status(const MeterStatus& status) {
  validate_status(status);
  nlohmann::ordered_json doc;
  doc["Agent"] = {{"DeviceName", status.device_name}, {"Time", status.time_ms}};
  doc["GlobalMeasure"] = {{"Voltage", status.voltage_v},
                          {"Frequency", status.frequency_hz}};
  doc["Outputs"] = nlohmann::ordered_json::array();
  for (const auto& ch : status.outputs) {
    doc["Outputs"].push_back({{"ID", ch.id},
                              {"Name", ch.name},
                              {"State", ch.state},
                              {"Load", ch.load_w},
                              {"Current", ch.current_ma},
                              {"PowerFactor", ch.power_factor},
                              {"Energy", round_energy_wh(ch.energy_wh)}});
  }
  return doc.dump();
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj,
                                           const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(ParseErrorKind::kSchemaViolation,
                     std::string("missing required field: ") + key);
  }
  return *it;
}

inline double require_number(const nlohmann::json& obj, const char* key) {
  const auto& v = require_field(obj, key);
  if (!v.is_number()) {
    throw ParseError(ParseErrorKind::kSchemaViolation,
                     std::string("field is not a number: ") + key);
  }
  return v.get<double>();
}

inline double optional_number(const nlohmann::json& obj, const char* key,
                              double fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    return fallback;
  }
  if (!it->is_number()) {
    throw ParseError(ParseErrorKind::kSchemaViolation,
                     std::string("field is not a number: ") + key);
  }
  return it->get<double>();
}

}  // namespace detail

/// Parses and validates a status document. Unknown fields are ignored. An
/// on-state channel without a Load field is an invariant violation (an off
/// channel may omit Load/Current, which then default to zero).
inline MeterStatus parse_meter_status(const std::string& raw) {
  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
  if (doc.is_discarded()) {
    throw ParseError(ParseErrorKind::kMalformedDocument,
                     "document is not valid JSON");
  }
  if (!doc.is_object()) {
    throw ParseError(ParseErrorKind::kSchemaViolation,
                     "top-level document must be an object");
  }

  MeterStatus status;
  const auto& agent = detail::require_field(doc, "Agent");
  if (!agent.is_object()) {
    throw ParseError(ParseErrorKind::kSchemaViolation, "Agent must be object");
  }
  const auto& name = detail::require_field(agent, "DeviceName");
  if (!name.is_string()) {
    throw ParseError(ParseErrorKind::kSchemaViolation,
                     "DeviceName must be a string");
  }
  status.device_name = name.get<std::string>();
  const auto& time = detail::require_field(agent, "Time");
  if (!time.is_number_integer()) {
    throw ParseError(ParseErrorKind::kSchemaViolation,
                     "Time must be integer milliseconds");
  }
  status.time_ms = time.get<std::int64_t>();

  const auto& global = detail::require_field(doc, "GlobalMeasure");
  if (!global.is_object()) {
    throw ParseError(ParseErrorKind::kSchemaViolation,
                     "GlobalMeasure must be object");
  }
  status.voltage_v = detail::require_number(global, "Voltage");
  status.frequency_hz = detail::require_number(global, "Frequency");

  const auto& outputs = detail::require_field(doc, "Outputs");
  if (!outputs.is_array()) {
    throw ParseError(ParseErrorKind::kSchemaViolation,
                     "Outputs must be an array");
  }
  for (const auto& entry : outputs) {
    if (!entry.is_object()) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "output entry must be an object");
    }
    OutputChannel ch;
    const auto& id = detail::require_field(entry, "ID");
    if (!id.is_number_integer()) {
      throw ParseError(ParseErrorKind::kSchemaViolation, "ID must be integer");
    }
    ch.id = id.get<int>();
    const auto& chname = detail::require_field(entry, "Name");
    if (!chname.is_string()) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "Name must be a string");
    }
    ch.name = chname.get<std::string>();
    const auto& state = detail::require_field(entry, "State");
    if (!state.is_number_integer()) {
      throw ParseError(ParseErrorKind::kSchemaViolation,
                       "State must be integer");
    }
    ch.state = state.get<int>();
    if (ch.state == 1 && !entry.contains("Load")) {
      throw ParseError(ParseErrorKind::kInvariantViolation,
                       "on-state channel without a Load reading");
    }
    ch.load_w = detail::optional_number(entry, "Load", 0.0);
    ch.current_ma = detail::optional_number(entry, "Current", 0.0);
    ch.power_factor = detail::optional_number(entry, "PowerFactor", 1.0);
    ch.energy_wh = detail::optional_number(entry, "Energy", 0.0);
    status.outputs.push_back(std::move(ch));
  }

  validate_status(status);
  return status;
}

}  // namespace wattbed::meter
