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

#include <stdexcept>

namespace wattbed::sim {

class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Affine model of the wall-vs-host measurement gap:
///   hardware = host + alpha + beta * (host - host_idle)
/// alpha is the fixed OS-invisible draw (fans, PSU loss, board components);
/// beta scales with the host's dynamic power. Two published operating points
/// determine it exactly, so nothing richer is identifiable.
struct GapModel {
  double alpha_w = 0.0;
  double beta = 0.0;
  double host_idle_w = 0.0;  // reference point the beta term pivots on

  double hardware_from_host(double host_w) const {
    return host_w + alpha_w + beta * (host_w - host_idle_w);
  }

  double host_from_hardware(double hardware_w) const {
    // Inverse of the affine map; 1 + beta > 0 for any fitted model.
    return host_idle_w +
           (hardware_w - (host_idle_w + alpha_w)) / (1.0 + beta);
  }
};

/// Fits the model to an idle and an active (hardware, host) pair.
inline GapModel fit_gap_model(double hw_idle_w, double host_idle_w,
                              double hw_active_w, double host_active_w) {
  if (host_active_w <= host_idle_w) {
    throw DegenerateFit("active host power must exceed idle host power");
  }
  GapModel m;
  m.host_idle_w = host_idle_w;
  m.alpha_w = hw_idle_w - host_idle_w;
  m.beta = (hw_active_w - host_active_w - m.alpha_w) /
           (host_active_w - host_idle_w);
  if (m.alpha_w < 0.0 || m.beta < 0.0) {
    throw DegenerateFit("fitted gap is negative; host exceeds hardware");
  }
  return m;
}

}  // namespace wattbed::sim
