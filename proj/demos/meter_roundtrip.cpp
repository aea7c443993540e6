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
// Minimal meter round trip: serve a two-channel mock meter on an ephemeral
// port, poll it over HTTP once a second, and print the samples plus the
// accumulated energy counter.

#include <chrono>
#include <iostream>
#include <thread>

#include "wattbed/common/numformat.hpp"
#include "wattbed/meter/mock_meter.hpp"
#include "wattbed/meter/poll.hpp"
#include "wattbed/meter/trace.hpp"

int main() {
  using namespace wattbed;

  meter::MockMeterConfig cfg;
  cfg.channels = {{1, "edge"}, {2, "ue1"}};
  const auto server = meter::serve_mock_meter(
      cfg, std::make_shared<meter::ConstantTrace>(
               std::map<std::string, double>{{"edge", 133.6}, {"ue1", 15.9}}));
  std::cout << "mock meter at " << server->base_url() << "/netio.json\n";

  meter::MeterPoller poller(cfg.host, server->port(),
                            {{1, "edge"}, {2, "ue1"}});
  for (int i = 0; i < 3; ++i) {
    for (const auto& s : poller.poll()) {
      std::cout << s.node_id << ": " << format_double(s.power_w) << " W, "
                << format_double(s.cumulative_energy_wh) << " Wh at t="
                << s.timestamp_ms << "\n";
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1000));
  }
  return 0;
}
