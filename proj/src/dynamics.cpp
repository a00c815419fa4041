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

#include "phonon_tomo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "phonon_tomo/error.hpp"
#include "phonon_tomo/numeric.hpp"

namespace phonon_tomo {

namespace {

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(name) + " must be finite and > 0");
  }
}

// Linear least squares of y = a + b g(t) for fixed basis g.
struct LinearFit {
  double a, b, rss;
};

LinearFit linear_fit(std::span<const double> g, std::span<const double> y) {
  const double n = double(y.size());
  NeumaierSum sg, sy;
  for (std::size_t k = 0; k < y.size(); ++k) {
    sg += g[k];
    sy += y[k];
  }
  const double mg = sg.value() / n, my = sy.value() / n;
  NeumaierSum sgg, sgy;
  for (std::size_t k = 0; k < y.size(); ++k) {
    sgg += (g[k] - mg) * (g[k] - mg);
    sgy += (g[k] - mg) * (y[k] - my);
  }
  const double b = sgg.value() > 0.0 ? sgy.value() / sgg.value() : 0.0;
  const double a = my - b * mg;
  NeumaierSum rss;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double d = y[k] - a - b * g[k];
    rss += d * d;
  }
  return {a, b, rss.value()};
}

}  // namespace

void DeviceParams::validate() const {
  require_positive(kappa, "kappa");
  require_positive(kappa_e, "kappa_e");
  require_positive(gamma_i, "gamma_i");
  require_positive(g0, "g0");
  require_positive(omega_m, "omega_m");
  if (kappa_e > kappa) throw DomainError("kappa_e must not exceed kappa");
  if (!(n_cav >= 0.0) || !std::isfinite(n_cav)) {
    throw DomainError("n_cav must be finite and >= 0");
  }
}

void FilterParams::validate() const {
  require_positive(beta, "beta");
  if (!(tau >= 0.0) || !std::isfinite(tau)) {
    throw DomainError("tau must be >= 0: the matched filter is only defined "
                      "for non-negative delay");
  }
  if (!std::isfinite(alpha_lo)) throw DomainError("alpha_lo must be finite");
}

double gamma_om(const DeviceParams& dev) {
  dev.validate();
  return 4.0 * dev.g0 * dev.g0 * dev.n_cav / dev.kappa;
}

double effective_linewidth(const DeviceParams& dev, DetuningSide side) {
  const double om = gamma_om(dev);
  if (side == DetuningSide::kRed) return dev.gamma_i + om;
  if (om >= dev.gamma_i) {
    throw DomainError("blue-side drive is unstable: gamma_om >= gamma_i");
  }
  return dev.gamma_i - om;
}

G0Fit fit_g0(std::span<const LinewidthPoint> points, double kappa,
             DetuningSide side) {
  require_positive(kappa, "kappa");
  if (points.size() < 3) throw AdequacyError("fit_g0 needs at least 3 points");
  std::set<double> distinct;
  for (const auto& p : points) distinct.insert(p.n_cav);
  if (distinct.size() < 3) {
    throw AdequacyError("fit_g0 needs at least 3 distinct n_cav values");
  }
  std::vector<double> x, y;
  for (const auto& p : points) {
    x.push_back(p.n_cav);
    y.push_back(p.linewidth);
  }
  const auto lin = linear_fit(x, y);
  const double sign = side == DetuningSide::kBlue ? -1.0 : 1.0;
  const double g0_sq = sign * lin.b * kappa / 4.0;
  if (!(g0_sq > 0.0)) {
    throw DomainError("fit_g0: fitted g0^2 is not positive; check the side");
  }

  G0Fit fit;
  fit.slope = lin.b;
  fit.intercept = lin.a;
  fit.gamma_i = lin.a;
  fit.g0 = std::sqrt(g0_sq);

  const double n = double(x.size());
  NeumaierSum sx;
  for (double v : x) sx += v;
  const double mx = sx.value() / n;
  NeumaierSum sxx;
  for (double v : x) sxx += (v - mx) * (v - mx);
  const double s2 = lin.rss / (n - 2.0);
  const double var_b = s2 / sxx.value();
  const double var_a = s2 * (1.0 / n + mx * mx / sxx.value());
  const double cov_ab = -s2 * mx / sxx.value();
  // g0 = sqrt(sign b kappa / 4): dg0/db = sign kappa / (8 g0).
  const double dg = sign * kappa / (8.0 * fit.g0);
  fit.covariance = {{{dg * dg * var_b, dg * cov_ab}, {dg * cov_ab, var_a}}};
  return fit;
}

double photocurrent_variance(const DeviceParams& dev, const FilterParams& filt,
                             double n_bar, bool heralded, DetuningSide side) {
  filt.validate();
  if (!(n_bar >= 0.0)) throw DomainError("n_bar must be >= 0");
  const double gamma = effective_linewidth(dev, side);
  const double om = gamma_om(dev);
  const double a2 = filt.alpha_lo * filt.alpha_lo;
  const double prefactor = 8.0 * a2 * dev.eta_c() * om /
                           ((gamma + filt.beta) * (gamma + filt.beta)) * n_bar *
                           dev.gamma_i;
  const double memory = heralded ? std::exp(-gamma * filt.tau) : 0.0;
  const double bracket = filt.beta / gamma * (1.0 + memory) + 1.0;
  return prefactor * bracket + (filt.shot_noise ? a2 : 0.0);
}

std::vector<VariancePoint> normalized_variance_curve(
    const DeviceParams& dev, double beta, double n_bar,
    std::span<const double> tau_grid, bool shot_noise, double alpha_lo,
    DetuningSide side) {
  if (tau_grid.empty()) throw DomainError("normalized_variance_curve: empty tau grid");
  std::vector<VariancePoint> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    const FilterParams filt{beta, tau, alpha_lo, shot_noise};
    const double h = photocurrent_variance(dev, filt, n_bar, true, side);
    const double t = photocurrent_variance(dev, filt, n_bar, false, side);
    if (!(t > 0.0)) {
      throw DomainError("thermal variance is zero; enable shot noise or n_cav > 0");
    }
    out.push_back({tau, h, t, h / t});
  }
  return out;
}

DecayFit fit_exponential_decay(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 4) {
    throw AdequacyError("fit_exponential_decay needs >= 4 matching points");
  }
  const auto [t_min, t_max] = std::minmax_element(t.begin(), t.end());
  const double span = *t_max - *t_min;
  if (!(span > 0.0)) throw DomainError("fit_exponential_decay: zero time span");

  // Variable projection: for a fixed rate the model is linear in
  // (offset, amplitude); search the rate in log space, then polish all three
  // parameters with Gauss-Newton.
  std::vector<double> g(t.size());
  auto rss_at = [&](double log_rate) {
    const double k = std::exp(log_rate);
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = std::exp(-k * (t[i] - *t_min));
    return linear_fit(g, y).rss;
  };
  const double lo = std::log(1e-3 / span), hi = std::log(1e3 / span);
  const auto best = boost::math::tools::brent_find_minima(rss_at, lo, hi, 52);
  double k = std::exp(best.first);
  for (std::size_t i = 0; i < t.size(); ++i) g[i] = std::exp(-k * (t[i] - *t_min));
  const auto lin = linear_fit(g, y);
  double a = lin.a, b = lin.b;

  for (int it = 0; it < 20; ++it) {
    // Normal equations J^T J d = J^T r for (a, b, k).
    double jtj[3][3] = {}, jtr[3] = {};
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double dt = t[i] - *t_min;
      const double e = std::exp(-k * dt);
      const double jac[3] = {1.0, e, -b * dt * e};
      const double res = y[i] - (a + b * e);
      for (int r = 0; r < 3; ++r) {
        jtr[r] += jac[r] * res;
        for (int c = 0; c < 3; ++c) jtj[r][c] += jac[r] * jac[c];
      }
    }
    // Gaussian elimination with partial pivoting.
    double m[3][4];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] = jtj[r][c];
      m[r][3] = jtr[r];
    }
    bool singular = false;
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r) {
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
      }
      if (m[piv][col] == 0.0) {
        singular = true;
        break;
      }
      std::swap(m[piv], m[col]);
      for (int r = col + 1; r < 3; ++r) {
        const double f = m[r][col] / m[col][col];
        for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
      }
    }
    if (singular) break;
    double d[3];
    for (int r = 2; r >= 0; --r) {
      double s = m[r][3];
      for (int c = r + 1; c < 3; ++c) s -= m[r][c] * d[c];
      d[r] = s / m[r][r];
    }
    a += d[0];
    b += d[1];
    k += d[2];
    if (std::abs(d[2]) <= 1e-15 * std::abs(k)) break;
  }
  // Back from the shifted time origin t - t_min.
  return {a, b * std::exp(k * *t_min), k};
}

double heralding_fidelity(double rate_sig, double rate_dark) {
  if (!(rate_sig >= 0.0) || !(rate_dark >= 0.0)) {
    throw DomainError("count rates must be >= 0");
  }
  if (rate_sig + rate_dark <= 0.0) {
    throw DomainError("signal and dark rates cannot both be zero");
  }
  return rate_sig / (rate_sig + rate_dark);
}

double expected_ratio(double chi) {
  if (!(chi >= 0.0 && chi <= 1.0)) throw DomainError("chi must lie in [0, 1]");
  return 1.0 + chi;
}

double rf_frequency_plan(double omega_m, double delta_if, double omega_aom,
                         DetuningSide side) {
  if (!(omega_m >= 0.0) || !(delta_if >= 0.0) || !(omega_aom >= 0.0)) {
    throw DomainError("frequencies must be >= 0");
  }
  if (!(omega_m > delta_if + omega_aom)) {
    throw DomainError("infeasible frequency plan: omega_m <= delta_if + omega_aom");
  }
  return side == DetuningSide::kBlue ? omega_m - delta_if - omega_aom
                                     : omega_m - delta_if + omega_aom;
}

}  // namespace phonon_tomo
