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

// Brute-force displaced thermal state: D = exp(alpha (a^dag - a)) from a
// dense matrix exponential in a large truncated Fock space.

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

inline std::vector<double> displaced_thermal_brute(double alpha, double n_added,
                                                   int n_keep, int dim = 400) {
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) {
    // <n|a^dag|n-1> = sqrt(n)
    gen(n, n - 1) = alpha * std::sqrt(double(n));
    gen(n - 1, n) = -alpha * std::sqrt(double(n));
  }
  const Eigen::MatrixXd d = gen.exp();
  const double t = n_added / (n_added + 1.0);
  std::vector<double> out(n_keep, 0.0);
  for (int n = 0; n < n_keep; ++n) {
    double acc = 0.0;
    for (int m = 0; m < dim; ++m) {
      acc += d(n, m) * d(n, m) * (1.0 - t) * std::pow(t, m);
    }
    out[n] = acc;
  }
  return out;
}

}  // namespace oracle
