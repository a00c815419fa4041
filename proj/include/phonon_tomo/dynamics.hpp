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

#include <array>
#include <numbers>
#include <span>
#include <vector>

// Closed-form optomechanical readout models. All rates are angular
// frequencies (rad/s); use hz() to convert quoted f = omega / 2pi values.

namespace phonon_tomo {

inline constexpr double hz(double f) { return 2.0 * std::numbers::pi * f; }

enum class DetuningSide { kBlue, kRed };

struct DeviceParams {
  double kappa = hz(822e6);
  double kappa_e = hz(190e6);
  double gamma_i = hz(2.06e6);
  double g0 = hz(1.01e6);
  double omega_m = hz(3.96e9);
  double n_cav = 0.0;
  // Recorded for completeness; no implemented model uses them.
  double eta_f = 0.76;
  double lambda_c = 1551e-9;

  double eta_c() const { return kappa_e / kappa; }
  double kappa_i() const { return kappa - kappa_e; }
  void validate() const;
};

struct FilterParams {
  double beta = 0.0;   // matched-filter energy decay rate, rad/s
  double tau = 0.0;    // delay after the herald click, s
  double alpha_lo = 1.0;
  bool shot_noise = true;

  void validate() const;
};

/// 4 g0^2 n_cav / kappa.
double gamma_om(const DeviceParams& dev);

/// gamma_i - gamma_om on the blue side, gamma_i + gamma_om on the red side.
/// Throws DomainError when blue-side driving is unstable.
double effective_linewidth(const DeviceParams& dev, DetuningSide side);

struct LinewidthPoint {
  double n_cav;
  double linewidth;  // rad/s
};

struct G0Fit {
  double g0 = 0.0;
  double gamma_i = 0.0;
  /// Covariance of (g0, gamma_i), propagated from the least-squares fit.
  std::array<std::array<double, 2>, 2> covariance{};
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of linewidth = gamma_i -/+ (4 g0^2 / kappa) n_cav.
/// Needs >= 3 points with distinct n_cav; a slope of the wrong sign for the
/// side throws DomainError.
G0Fit fit_g0(std::span<const LinewidthPoint> points, double kappa,
             DetuningSide side = DetuningSide::kBlue);

/// Filtered photocurrent variance <I^dagger I>(tau, beta) for a heralded
/// phonon-added state (heralded = true) or the stationary thermal state
/// (heralded = false, the tau -> infinity limit). Valid for n_bar >> 1.
double photocurrent_variance(const DeviceParams& dev, const FilterParams& filt,
                             double n_bar, bool heralded,
                             DetuningSide side = DetuningSide::kBlue);

struct VariancePoint {
  double tau;
  double heralded;
  double thermal;
  double ratio;
};

/// Heralded over thermal variance on a delay grid.
std::vector<VariancePoint> normalized_variance_curve(
    const DeviceParams& dev, double beta, double n_bar,
    std::span<const double> tau_grid, bool shot_noise = true,
    double alpha_lo = 1.0, DetuningSide side = DetuningSide::kBlue);

struct DecayFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double rate = 0.0;
};

/// Least-squares fit of y = offset + amplitude exp(-rate t).
DecayFit fit_exponential_decay(std::span<const double> t, std::span<const double> y);

/// Gamma_sig / (Gamma_sig + Gamma_dark).
double heralding_fidelity(double rate_sig, double rate_dark);
/// Expected n_post / n_th = 1 + chi.
double expected_ratio(double chi);

/// RF drive for single-sideband down-conversion: omega_m - delta_if -
/// omega_aom (blue) or omega_m - delta_if + omega_aom (red).
double rf_frequency_plan(double omega_m, double delta_if, double omega_aom,
                         DetuningSide side);

}  // namespace phonon_tomo
