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

#include "phonon_tomo/states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "phonon_tomo/error.hpp"
#include "phonon_tomo/numeric.hpp"

namespace phonon_tomo {

namespace {

constexpr double kPi = std::numbers::pi;

void require_radius(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw DomainError("radius must be finite and >= 0, got " +
                      std::to_string(r));
  }
}

void require_n_bar(double n_bar) {
  if (!(n_bar >= 0.0) || !std::isfinite(n_bar)) {
    throw DomainError("n_bar must be finite and >= 0, got " +
                      std::to_string(n_bar));
  }
}

}  // namespace

DiagonalState::DiagonalState(std::vector<double> probs, double tail_mass)
    : probs_(std::move(probs)), tail_mass_(tail_mass) {
  if (probs_.empty()) throw DomainError("DiagonalState needs n_fock >= 1");
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw DomainError("DiagonalState probabilities must be finite and >= 0");
    }
  }
  if (!(tail_mass_ >= 0.0)) throw DomainError("tail_mass must be >= 0");
  const double total = stable_sum(probs_);
  if (!(total > 0.0)) throw DomainError("DiagonalState has zero total mass");
  for (double& p : probs_) p /= total;
}

DiagonalState DiagonalState::vacuum(std::size_t n_fock) {
  return fock(0, n_fock);
}

DiagonalState DiagonalState::fock(std::size_t n, std::size_t n_fock) {
  if (n >= n_fock) throw DomainError("Fock level outside dimension");
  std::vector<double> p(n_fock, 0.0);
  p[n] = 1.0;
  return DiagonalState(std::move(p));
}

DiagonalState DiagonalState::uniform(std::size_t n_fock) {
  if (n_fock == 0) throw DomainError("DiagonalState needs n_fock >= 1");
  return DiagonalState(std::vector<double>(n_fock, 1.0 / double(n_fock)));
}

void to_json(nlohmann::json& j, const DiagonalState& s) {
  j = nlohmann::json{{"n_fock", s.n_fock()},
                     {"probs", std::vector<double>(s.probs().begin(),
                                                   s.probs().end())},
                     {"tail_mass", s.tail_mass()}};
}

void from_json(const nlohmann::json& j, DiagonalState& s) {
  auto probs = j.at("probs").get<std::vector<double>>();
  if (j.at("n_fock").get<std::size_t>() != probs.size()) {
    throw DomainError("DiagonalState JSON: n_fock does not match probs");
  }
  s = DiagonalState(std::move(probs), j.value("tail_mass", 0.0));
}

void QModelParams::validate() const {
  require_n_bar(n_bar);
  if (!(n_added >= 0.0) || !std::isfinite(n_added)) {
    throw DomainError("n_added must be finite and >= 0");
  }
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    throw DomainError("gain must be finite and > 0");
  }
}

std::size_t default_n_fock(double n_bar) {
  require_n_bar(n_bar);
  const double n = std::ceil(25.0 * (n_bar + 1.0));
  return static_cast<std::size_t>(std::min(n, 65536.0));
}

DiagonalState thermal_state(double n_bar, std::optional<std::size_t> n_fock) {
  require_n_bar(n_bar);
  const std::size_t dim = n_fock.value_or(default_n_fock(n_bar));
  if (dim == 0) throw DomainError("n_fock must be >= 1");
  if (n_bar == 0.0) return DiagonalState::vacuum(dim);

  // p_n = (1 - q) q^n with q = n_bar / (n_bar + 1); the tail beyond the
  // truncation carries q^dim.
  const double log_q = std::log(n_bar) - std::log1p(n_bar);
  const double one_minus_q = 1.0 / (n_bar + 1.0);
  std::vector<double> p(dim);
  for (std::size_t n = 0; n < dim; ++n) {
    p[n] = one_minus_q * std::exp(double(n) * log_q);
  }
  const double tail = std::exp(double(dim) * log_q);
  return DiagonalState(std::move(p), tail);
}

DiagonalState phonon_add(const DiagonalState& state) {
  const auto p = state.probs();
  std::vector<double> out(p.size() + 1, 0.0);
  for (std::size_t m = 1; m < out.size(); ++m) {
    out[m] = double(m) * p[m - 1];
  }
  return DiagonalState(std::move(out), state.tail_mass());
}

DiagonalState phonon_subtract(const DiagonalState& state) {
  const auto p = state.probs();
  std::vector<double> out(p.size(), 0.0);
  bool any = false;
  for (std::size_t n = 0; n + 1 < p.size(); ++n) {
    out[n] = double(n + 1) * p[n + 1];
    any = any || out[n] > 0.0;
  }
  if (!any) {
    throw DomainError("phonon_subtract: state has no support above vacuum");
  }
  return DiagonalState(std::move(out), state.tail_mass());
}

DiagonalState bayes_update(const DiagonalState& state) {
  const auto p = state.probs();
  std::vector<double> out(p.size(), 0.0);
  bool any = false;
  for (std::size_t n = 1; n < p.size(); ++n) {
    out[n] = double(n) * p[n];
    any = any || out[n] > 0.0;
  }
  if (!any) throw DomainError("bayes_update: mean phonon number is zero");
  return DiagonalState(std::move(out), state.tail_mass());
}

double mean_phonon(const DiagonalState& state) {
  const auto p = state.probs();
  NeumaierSum acc;
  for (std::size_t n = 1; n < p.size(); ++n) acc += double(n) * p[n];
  return acc.value();
}

double second_moment(const DiagonalState& state) {
  const auto p = state.probs();
  NeumaierSum acc;
  for (std::size_t n = 1; n < p.size(); ++n) {
    acc += double(n) * double(n) * p[n];
  }
  return acc.value();
}

double q_thermal(double r, double n_bar) {
  require_radius(r);
  require_n_bar(n_bar);
  const double s = n_bar + 1.0;
  return std::exp(-r * r / s) / (kPi * s);
}

double q_added(double r, double n_bar) {
  require_radius(r);
  require_n_bar(n_bar);
  const double s = n_bar + 1.0;
  return r * r * std::exp(-r * r / s) / (kPi * s * s);
}

double q_subtracted(double r, double n_bar) {
  require_radius(r);
  require_n_bar(n_bar);
  const double s = n_bar + 1.0;
  // Normalized (q_thermal + n_bar q_added) / (n_bar + 1).
  return (1.0 + n_bar * r * r / s) * std::exp(-r * r / s) / (kPi * s * s);
}

double q_diagonal(double r, const DiagonalState& state) {
  require_radius(r);
  const auto p = state.probs();
  if (r == 0.0) return p[0] / kPi;
  // Terms p_n exp(-r^2 + 2n log r - log n!) peak near n = r^2; shift by the
  // largest exponent before exponentiating.
  const double r2 = r * r;
  const double log_r2 = std::log(r2);
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(p.size());
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (p[n] <= 0.0) {
      logs[n] = -std::numeric_limits<double>::infinity();
      continue;
    }
    logs[n] = std::log(p[n]) + double(n) * log_r2 - std::lgamma(double(n) + 1.0);
    max_log = std::max(max_log, logs[n]);
  }
  NeumaierSum acc;
  for (double l : logs) acc += std::exp(l - max_log);
  return std::exp(max_log - r2) * acc.value() / kPi;
}

double q_added_noisy(double r, const QModelParams& params) {
  require_radius(r);
  params.validate();
  const double s1 = params.sigma1_sq();
  const double s2 = params.sigma2_sq();
  if (s2 < 1e-6 * s1) return q_added(r, params.n_bar);
  // (1/4pi)(1/(s2 s1^2))^2 (2 st^4 + st^6 r^2 / s2^2) exp(-r^2 / 2S), with
  // st = s1 s2 / S and S = s1 + s2 (all variances), simplifies to the form
  // below, which has no 1/s2 factor.
  const double total = s1 + s2;
  const double t2 = total * total;
  return (2.0 * s2 / t2 + s1 * r * r / (t2 * total)) *
         std::exp(-r * r / (2.0 * total)) / (4.0 * kPi);
}

double q_thermal_noisy(double r, const QModelParams& params) {
  require_radius(r);
  params.validate();
  return q_thermal(r, params.n_bar + params.n_added);
}

double q_subtracted_noisy(double r, const QModelParams& params) {
  const double nb = params.n_bar;
  return (q_thermal_noisy(r, params) + nb * q_added_noisy(r, params)) /
         (nb + 1.0);
}

}  // namespace phonon_tomo
