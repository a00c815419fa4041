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

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "phonon_tomo/sampler.hpp"
#include "phonon_tomo/states.hpp"

namespace phonon_tomo {

/// Which analytic Q function the 2D model uses. kAdded is the post-selected
/// model; kSubtracted is its n_bar-weighted mixture with the thermal one;
/// kHeralded mixes added (weight chi) and thermal (1 - chi).
enum class QModelKind { kThermal, kAdded, kSubtracted, kHeralded };

/// Noisy model Q density at radius r (alpha units). chi is read by
/// kHeralded only.
double model_q(QModelKind kind, double r, const QModelParams& params,
               double chi = 1.0);

struct BinModelOptions {
  /// Split a cell into 3 x 3 sub-cells when its alpha-space width exceeds
  /// this fraction of the per-quadrature standard deviation.
  double refine_width = 0.5;
  double chi = 1.0;
};

/// Model probability of every cell of a 2D grid (row-major, ix * n + ip),
/// from the Q density at the cell centre in alpha = v / sqrt(gain) times
/// the alpha-space cell area, renormalized over the in-range cells.
std::vector<double> predicted_bin_probs(QModelKind kind, const QModelParams& params,
                                        const std::vector<double>& edges_x,
                                        const std::vector<double>& edges_p,
                                        const BinModelOptions& options = {});

/// Multinomial log-likelihood sum counts * log(prob) of the in-range cells.
double histogram_loglik(const Histogram2D& hist, QModelKind kind,
                        const QModelParams& params,
                        const BinModelOptions& options = {});

struct QFitOptions {
  QModelKind kind = QModelKind::kAdded;
  /// Herald fidelity for kHeralded.
  double chi = 1.0;
  std::size_t max_eval = 2000;
  /// Simplex size (in log-parameter units) at which the search stops.
  double size_tol = 1e-6;
  std::uint64_t min_counts = 10000;
};

struct QFitResult {
  double gain = 0.0;
  double n_added = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  std::size_t n_eval = 0;
};

/// Fits (gain, n_added) with n_bar fixed by maximizing the multinomial
/// likelihood with a Nelder-Mead simplex over (log gain, log(n_added + 1)).
/// Throws AdequacyError below options.min_counts in-range counts.
QFitResult fit_q(const Histogram2D& hist, double n_bar_fixed, double gain0,
                 double n_added0, const QFitOptions& options = {});

enum class Axis { kX, kP };

struct Linecut {
  std::vector<double> centers;  // volts
  std::vector<std::uint64_t> counts;
};

/// Profile along `axis` at the given cell index of the other axis; e.g.
/// linecut(h, Axis::kX, h.n_bins / 2) is the cut through P = 0.
Linecut linecut(const Histogram2D& hist, Axis axis, std::size_t index);

struct ChiSquare {
  double chi2 = 0.0;
  std::size_t dof = 0;
  double per_dof() const { return dof > 0 ? chi2 / double(dof) : 0.0; }
};

/// Pearson chi-square of the histogram against model cell probabilities,
/// over cells with expected count >= min_expected. dof = cells used -
/// 1 - n_fitted.
ChiSquare pearson_chi2(const Histogram2D& hist, const std::vector<double>& probs,
                       double min_expected = 5.0, std::size_t n_fitted = 0);

void to_json(nlohmann::json& j, const QFitResult& r);

}  // namespace phonon_tomo
