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
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wattbed/common/http.hpp"

#include "wattbed/common/time.hpp"
#include "wattbed/meter/status.hpp"
#include "wattbed/meter/trace.hpp"

namespace wattbed::meter {

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MockMeterConfig {
  std::string device_name = "wattbed-pdu";
  std::string host = "127.0.0.1";
  int port = 0;  // 0 = pick any free port
  double voltage_v = 230.0;
  double frequency_hz = 50.0;
  double power_factor = 1.0;
  // Channel id -> channel name, served in id order.
  std::map<int, std::string> channels;
  // Meter-local clock; skew it to exercise relative-time alignment.
  Clock* clock = nullptr;
  // HTTP worker threads. Keep-alive pollers hold a worker each, so size this
  // above the expected number of concurrent clients.
  int worker_threads = 16;
};

/// HTTP stand-in for a smart power socket. Serves the status document at
/// GET /netio.json, reading the attached trace at request time. Cumulative
/// energy is integrated trapezoidally between successive requests under one
/// lock, so concurrent pollers always observe monotone counters.
class MockMeterServer {
 public:
  MockMeterServer(MockMeterConfig config,
                  std::shared_ptr<PowerTraceSource> trace)
      : config_(std::move(config)), trace_(std::move(trace)) {
    if (config_.channels.empty()) {
      throw BindError("mock meter needs at least one channel");
    }
    if (config_.clock == nullptr) {
      config_.clock = &SystemClock::instance();
    }
    server_.set_tcp_nodelay(true);  // sub-ms responses on loopback
    // SO_REUSEADDR only: restarts may reuse a TIME_WAIT port, but binding a
    // port another live meter holds must fail loudly.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR,
                   reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    server_.new_task_queue = [n = config_.worker_threads] {
      return new httplib::ThreadPool(static_cast<std::size_t>(n > 0 ? n : 1));
    };
    server_.Get("/netio.json",
                [this](const httplib::Request&, httplib::Response& res) {
                  res.set_content(render_status(), "application/json");
                });
  }

  ~MockMeterServer() { stop(); }

  MockMeterServer(const MockMeterServer&) = delete;
  MockMeterServer& operator=(const MockMeterServer&) = delete;

  /// Binds and starts serving on a background thread. Throws BindError if the
  /// configured port is taken or no ephemeral port can be acquired.
  void start() {
    if (config_.port == 0) {
      port_ = server_.bind_to_any_port(config_.host);
      if (port_ < 0) {
        throw BindError("failed to bind mock meter to any port on " +
                        config_.host);
      }
    } else {
      if (!server_.bind_to_port(config_.host, config_.port)) {
        throw BindError("failed to bind mock meter to " + config_.host + ":" +
                        std::to_string(config_.port));
      }
      port_ = config_.port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    while (!server_.is_running()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }

  std::string base_url() const {
    return "http://" + config_.host + ":" + std::to_string(port_);
  }

  const MockMeterConfig& config() const { return config_; }

  /// Builds the current status document. Exposed for in-process tests; the
  /// HTTP handler serves exactly this string.
  std::string render_status() {
    const std::int64_t now = config_.clock->now_ms();
    MeterStatus status;
    status.device_name = config_.device_name;
    status.time_ms = now;
    status.voltage_v = config_.voltage_v;
    status.frequency_hz = config_.frequency_hz;

    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [id, name] : config_.channels) {
      const std::optional<double> load = trace_->load_at(name, now);
      OutputChannel ch;
      ch.id = id;
      ch.name = name;
      ch.power_factor = config_.power_factor;
      if (load.has_value()) {
        ch.state = 1;
        ch.load_w = *load;
        ch.current_ma =
            ch.load_w / (config_.voltage_v * config_.power_factor) * 1000.0;
      } else {
        ch.state = 0;
        ch.load_w = 0.0;
        ch.current_ma = 0.0;
      }
      ch.energy_wh = accumulate_energy(id, now, ch.load_w);
      status.outputs.push_back(std::move(ch));
    }
    return encode_meter_status(status);
  }

 private:
  struct EnergyCell {
    bool seen = false;
    std::int64_t last_ms = 0;
    double last_load_w = 0.0;
    double energy_wh = 0.0;
  };

  // Caller holds mu_. A repeated or rewound clock adds nothing; the counter
  // never decreases.
  double accumulate_energy(int id, std::int64_t now_ms, double load_w) {
    EnergyCell& cell = energy_[id];
    if (cell.seen && now_ms > cell.last_ms) {
      const double dt_s = static_cast<double>(now_ms - cell.last_ms) / 1000.0;
      cell.energy_wh += (cell.last_load_w + load_w) / 2.0 * dt_s / 3600.0;
    }
    if (!cell.seen || now_ms >= cell.last_ms) {
      cell.seen = true;
      cell.last_ms = now_ms;
      cell.last_load_w = load_w;
    }
    return cell.energy_wh;
  }

  MockMeterConfig config_;
  std::shared_ptr<PowerTraceSource> trace_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;

  std::mutex mu_;
  std::map<int, EnergyCell> energy_;
};

/// Starts a mock meter serving `trace` and returns the running service.
inline std::unique_ptr<MockMeterServer> serve_mock_meter(
    MockMeterConfig config, std::shared_ptr<PowerTraceSource> trace) {
  auto server = std::make_unique<MockMeterServer>(std::move(config),
                                                  std::move(trace));
  server->start();
  return server;
}

}  // namespace wattbed::meter
