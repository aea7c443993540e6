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

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wattbed/common/http.hpp"

#include "wattbed/meter/status.hpp"

namespace wattbed::meter {

/// Endpoint unreachable, timed out, or returned a non-200; carries what a
/// retry loop needs. No samples are emitted for a failed poll.
class TransportError : public std::runtime_error {
 public:
  TransportError(std::string endpoint, const std::string& detail,
                 int attempts, std::int64_t retry_after_ms)
      : std::runtime_error("poll of " + endpoint + " failed: " + detail),
        endpoint_(std::move(endpoint)),
        attempts_(attempts),
        retry_after_ms_(retry_after_ms) {}

  const std::string& endpoint() const { return endpoint_; }
  int attempts() const { return attempts_; }
  std::int64_t retry_after_ms() const { return retry_after_ms_; }

 private:
  std::string endpoint_;
  int attempts_;
  std::int64_t retry_after_ms_;
};

/// Pull client for one meter endpoint. Maps the device's channel ids onto
/// testbed node ids and keeps per-node timestamp state so emitted samples are
/// strictly increasing in time even when the meter clock stalls.
class MeterPoller {
 public:
  static constexpr double kDefaultTimeoutS = 2.0;

  MeterPoller(std::string host, int port,
              std::map<int, std::string> channel_map,
              double timeout_s = kDefaultTimeoutS)
      : host_(std::move(host)),
        port_(port),
        channel_map_(std::move(channel_map)),
        timeout_s_(timeout_s),
        client_(host_, port_) {
    const auto sec = static_cast<time_t>(timeout_s_);
    const auto usec =
        static_cast<time_t>((timeout_s_ - static_cast<double>(sec)) * 1e6);
    client_.set_connection_timeout(sec, usec);
    client_.set_read_timeout(sec, usec);
    client_.set_keep_alive(true);
    client_.set_tcp_nodelay(true);
  }

  std::string endpoint() const {
    return "http://" + host_ + ":" + std::to_string(port_) + "/netio.json";
  }

  /// One poll: fetch, parse, map. Throws TransportError when the endpoint
  /// cannot be reached in time, ParseError when the document is bad or a
  /// mapped channel id is absent from the device. A channel whose meter
  /// timestamp has not advanced since the previous poll yields no sample.
  std::vector<MeterSample> poll() {
    ++attempts_;
    httplib::Result res = client_.Get("/netio.json");
    if (!res) {
      throw TransportError(endpoint(), httplib::to_string(res.error()),
                           attempts_, retry_after_ms_);
    }
    if (res->status != 200) {
      throw TransportError(endpoint(),
                           "HTTP status " + std::to_string(res->status),
                           attempts_, retry_after_ms_);
    }
    attempts_ = 0;

    const MeterStatus status = parse_meter_status(res->body);
    std::map<int, const OutputChannel*> by_id;
    for (const auto& ch : status.outputs) {
      by_id[ch.id] = &ch;
    }

    std::vector<MeterSample> samples;
    for (const auto& [id, node] : channel_map_) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw ParseError(ParseErrorKind::kSchemaViolation,
                         "mapped channel id " + std::to_string(id) +
                             " absent from device " + status.device_name);
      }
      auto& last = last_ts_.emplace(node, INT64_MIN).first->second;
      if (status.time_ms <= last) {
        continue;
      }
      last = status.time_ms;
      samples.push_back(MeterSample{node, status.time_ms, it->second->load_w,
                                    it->second->energy_wh});
    }
    return samples;
  }

 private:
  std::string host_;
  int port_;
  std::map<int, std::string> channel_map_;
  double timeout_s_;
  httplib::Client client_;
  int attempts_ = 0;
  std::int64_t retry_after_ms_ = 1000;
  std::map<std::string, std::int64_t> last_ts_;
};

/// One-shot convenience wrapper around MeterPoller.
inline std::vector<MeterSample> poll_meter(
    const std::string& host, int port,
    const std::map<int, std::string>& channel_map,
    double timeout_s = MeterPoller::kDefaultTimeoutS) {
  MeterPoller poller(host, port, channel_map, timeout_s);
  return poller.poll();
}

}  // namespace wattbed::meter
