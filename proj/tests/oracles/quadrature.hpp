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

// Adaptive quadrature used as an independent reference. Nothing here shares
// code with the library's closed forms or fixed-order rules.

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-14) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 12, tol);
}

/// Integral over [a, b) split into pieces of width `panel` so that narrow
/// peaks far from a are still resolved.
template <class F>
double integrate_panels(F&& f, double a, double b, double panel,
                        double tol = 1e-14) {
  double acc = 0.0;
  for (double lo = a; lo < b; lo += panel) {
    acc += integrate(f, lo, std::min(b, lo + panel), tol);
  }
  return acc;
}

}  // namespace oracle
