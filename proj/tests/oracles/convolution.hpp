// Copyright 2026 The phonon-tomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Measured radial density under additive complex Gaussian noise of
// per-quadrature variance n_added / 2, by direct 2D quadrature of the
// convolution integral in polar coordinates.

#include <cmath>
#include <numbers>

#include "oracles/quadrature.hpp"

namespace oracle {

/// q(s) is a radially symmetric phase-space density; returns (q * N)(r).
template <class Q>
double convolve_radial(Q&& q, double r, double n_added, double s_max) {
  const double norm = 1.0 / (std::numbers::pi * n_added);
  auto ring = [&](double s) {
    auto angular = [&](double phi) {
      const double d2 = r * r + s * s - 2.0 * r * s * std::cos(phi);
      return norm * std::exp(-d2 / n_added);
    };
    return s * q(s) * integrate(angular, 0.0, 2.0 * std::numbers::pi, 1e-13);
  };
  return integrate_panels(ring, 0.0, s_max, 1.0, 1e-13);
}

}  // namespace oracle
