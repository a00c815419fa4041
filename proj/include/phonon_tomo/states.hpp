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
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace phonon_tomo {

/// Tail mass above which a truncated thermal state is flagged.
inline constexpr double kTruncationWarnThreshold = 1e-9;

/// Phonon-number distribution of a phase-insensitive mechanical state.
///
/// Immutable value: every operation below returns a new state. The
/// probability vector is always non-negative and normalized to 1 within
/// 1e-12; `tail_mass` records the probability dropped by truncating an
/// infinite-support distribution to `n_fock()` levels.
class DiagonalState {
 public:
  /// Validates and renormalizes `probs`. Throws DomainError on empty input,
  /// negative or non-finite entries, or zero total mass.
  explicit DiagonalState(std::vector<double> probs, double tail_mass = 0.0);

  static DiagonalState vacuum(std::size_t n_fock);
  static DiagonalState fock(std::size_t n, std::size_t n_fock);
  static DiagonalState uniform(std::size_t n_fock);

  std::size_t n_fock() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t n) const { return probs_[n]; }
  double tail_mass() const { return tail_mass_; }
  bool truncation_warning() const {
    return tail_mass_ > kTruncationWarnThreshold;
  }

  friend bool operator==(const DiagonalState&, const DiagonalState&) = default;

 private:
  std::vector<double> probs_;
  double tail_mass_ = 0.0;
};

void to_json(nlohmann::json& j, const DiagonalState& s);
void from_json(const nlohmann::json& j, DiagonalState& s);

/// Noise model for detected Q functions: thermal occupancy, added technical
/// noise (phonon units) and detection gain (V^2 per phonon).
struct QModelParams {
  double n_bar = 0.0;
  double n_added = 0.0;
  double gain = 1.0;

  /// Per-quadrature variance of the state's own Q function.
  double sigma1_sq() const { return (n_bar + 1.0) / 2.0; }
  /// Per-quadrature variance of the added noise.
  double sigma2_sq() const { return n_added / 2.0; }

  void validate() const;
};

/// Default Fock dimension for a thermal-like state: ceil(25 (n_bar + 1)),
/// capped at 65536.
std::size_t default_n_fock(double n_bar);

/// Geometric distribution with mean `n_bar`, truncated to `n_fock` levels
/// (default_n_fock when omitted) and renormalized.
DiagonalState thermal_state(double n_bar,
                            std::optional<std::size_t> n_fock = std::nullopt);

/// b^dagger rho b / Tr. The result has one more level than the input so the
/// map is exact (the top level is shifted up, not dropped).
DiagonalState phonon_add(const DiagonalState& state);
/// b rho b^dagger / Tr. Throws DomainError for the vacuum.
DiagonalState phonon_subtract(const DiagonalState& state);
/// Heralding update P(n) -> n P(n) / <n>. Throws DomainError for the vacuum.
DiagonalState bayes_update(const DiagonalState& state);

double mean_phonon(const DiagonalState& state);
/// Second raw moment <n^2>.
double second_moment(const DiagonalState& state);

// Husimi Q densities per unit phase-space area at radius r = |alpha|.
double q_thermal(double r, double n_bar);
double q_added(double r, double n_bar);
double q_subtracted(double r, double n_bar);

/// (1/pi) <alpha|rho|alpha> for a diagonal state, summed in log space.
double q_diagonal(double r, const DiagonalState& state);

/// Phonon-added Q function convolved with isotropic Gaussian technical noise
/// of per-quadrature variance n_added/2. Falls back to q_added when the
/// noise variance is below 1e-6 of the state variance.
double q_added_noisy(double r, const QModelParams& params);
/// Thermal Q with added noise: Gaussian of per-quadrature variance
/// (n_bar + 1 + n_added) / 2.
double q_thermal_noisy(double r, const QModelParams& params);
/// Mixture (q_thermal_noisy + n_bar q_added_noisy) / (n_bar + 1).
double q_subtracted_noisy(double r, const QModelParams& params);

}  // namespace phonon_tomo
