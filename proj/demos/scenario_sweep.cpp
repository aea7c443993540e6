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
// Prints per-node mean power for every scenario in the built-in matrix by
// sampling the simulator directly (no meter, no storage). Useful to eyeball
// the calibrated operating points.

#include <iostream>
#include <map>

#include "wattbed/cli/orchestrator.hpp"
#include "wattbed/common/numformat.hpp"
#include "wattbed/sim/model.hpp"

int main() {
  using namespace wattbed;

  const sim::CalibrationTable cal = sim::CalibrationTable::builtin();
  for (const auto& cfg : cli::builtin_scenarios(42, 120.0)) {
    const sim::SimModel model(cfg, cal, false);
    std::map<std::string, double> sum;
    for (int k = 0; k < model.tick_count(); ++k) {
      for (const auto& [node, w] : model.step(k).true_power_w) {
        sum[node] += w;
      }
    }
    std::cout << sim::run_id(cfg) << "\n";
    for (const auto& [node, total] : sum) {
      std::cout << "  " << node << "  "
                << format_fixed(total / model.tick_count(), 2) << " W\n";
    }
  }
  return 0;
}
