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

// Direct maximization of sum_i f_i log((A p)_i) over the probability simplex
// by projected gradient ascent with backtracking.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

/// Euclidean projection onto {p >= 0, sum p = 1}.
inline std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / double(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

/// a is bins x n row-major; returns the maximizer.
inline std::vector<double> simplex_mle(const std::vector<double>& a,
                                       const std::vector<double>& f,
                                       std::size_t n, int max_iter = 200000,
                                       double tol = 1e-15) {
  const std::size_t bins = f.size();
  auto objective = [&](const std::vector<double>& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
      if (f[i] == 0.0) continue;
      double q = 0.0;
      for (std::size_t k = 0; k < n; ++k) q += a[i * n + k] * p[k];
      if (!(q > 0.0)) return -std::numeric_limits<double>::infinity();
      acc += f[i] * std::log(q);
    }
    return acc;
  };
  std::vector<double> p(n, 1.0 / double(n)), grad(n);
  double value = objective(p);
  double step = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < bins; ++i) {
      if (f[i] == 0.0) continue;
      double q = 0.0;
      for (std::size_t k = 0; k < n; ++k) q += a[i * n + k] * p[k];
      for (std::size_t k = 0; k < n; ++k) grad[k] += f[i] * a[i * n + k] / q;
    }
    step = std::min(step * 2.0, 1e6);
    std::vector<double> trial;
    double trial_value;
    for (;;) {
      trial = p;
      for (std::size_t k = 0; k < n; ++k) trial[k] += step * grad[k];
      trial = project_simplex(trial);
      trial_value = objective(trial);
      if (trial_value >= value) break;
      step *= 0.5;
      if (step < 1e-300) return p;
    }
    double moved = 0.0;
    for (std::size_t k = 0; k < n; ++k) moved += std::abs(trial[k] - p[k]);
    p = std::move(trial);
    value = trial_value;
    if (moved < tol) break;
  }
  return p;
}

}  // namespace oracle
