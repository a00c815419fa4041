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

#include "phonon_tomo/qfit.hpp"

#include <cmath>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <nlohmann/json.hpp>

#include "phonon_tomo/error.hpp"
#include "phonon_tomo/numeric.hpp"
#include "phonon_tomo/parallel.hpp"

namespace phonon_tomo {

namespace {

// Floor for cell probabilities so wildly wrong trial parameters give a large
// but finite cost.
constexpr double kProbFloor = 1e-300;

void check_axis(const std::vector<double>& edges) {
  if (edges.size() < 2) throw DomainError("degenerate geometry: need >= 2 edges");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (!std::isfinite(edges[k]) || (k > 0 && !(edges[k] > edges[k - 1]))) {
      throw DomainError("degenerate geometry: edges must increase strictly");
    }
  }
}

struct GslVector {
  explicit GslVector(std::size_t n) : v(gsl_vector_alloc(n)) {}
  ~GslVector() { gsl_vector_free(v); }
  GslVector(const GslVector&) = delete;
  GslVector& operator=(const GslVector&) = delete;
  gsl_vector* v;
};

struct GslMinimizer {
  explicit GslMinimizer(std::size_t n)
      : m(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n)) {}
  ~GslMinimizer() { gsl_multimin_fminimizer_free(m); }
  GslMinimizer(const GslMinimizer&) = delete;
  GslMinimizer& operator=(const GslMinimizer&) = delete;
  gsl_multimin_fminimizer* m;
};

struct FitContext {
  const Histogram2D* hist;
  QModelKind kind;
  double n_bar;
  BinModelOptions bins;
  std::size_t n_eval = 0;
};

QModelParams unpack(const gsl_vector* x, double n_bar) {
  return QModelParams{n_bar, std::expm1(gsl_vector_get(x, 1)),
                      std::exp(gsl_vector_get(x, 0))};
}

double negative_loglik(const gsl_vector* x, void* data) {
  auto* ctx = static_cast<FitContext*>(data);
  ++ctx->n_eval;
  const QModelParams params = unpack(x, ctx->n_bar);
  if (!std::isfinite(params.gain) || !(params.gain > 0.0) ||
      !std::isfinite(params.n_added) || params.n_added < 0.0) {
    return GSL_POSINF;
  }
  return -histogram_loglik(*ctx->hist, ctx->kind, params, ctx->bins);
}

}  // namespace

double model_q(QModelKind kind, double r, const QModelParams& params, double chi) {
  switch (kind) {
    case QModelKind::kThermal: return q_thermal_noisy(r, params);
    case QModelKind::kAdded: return q_added_noisy(r, params);
    case QModelKind::kSubtracted: return q_subtracted_noisy(r, params);
    case QModelKind::kHeralded:
      if (!(chi >= 0.0 && chi <= 1.0)) throw DomainError("chi must lie in [0, 1]");
      return chi * q_added_noisy(r, params) + (1.0 - chi) * q_thermal_noisy(r, params);
  }
  throw DomainError("unknown Q model kind");
}

std::vector<double> predicted_bin_probs(QModelKind kind, const QModelParams& params,
                                        const std::vector<double>& edges_x,
                                        const std::vector<double>& edges_p,
                                        const BinModelOptions& options) {
  params.validate();
  if (!(options.chi >= 0.0 && options.chi <= 1.0)) {
    throw DomainError("chi must lie in [0, 1]");
  }
  check_axis(edges_x);
  check_axis(edges_p);
  const std::size_t nx = edges_x.size() - 1;
  const std::size_t np = edges_p.size() - 1;
  const double inv_scale = 1.0 / std::sqrt(params.gain);
  const double sigma = std::sqrt(params.sigma1_sq() + params.sigma2_sq());

  std::vector<double> probs(nx * np);
  parallel_for(nx, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ix = lo; ix < hi; ++ix) {
      const double x0 = edges_x[ix] * inv_scale;
      const double wx = (edges_x[ix + 1] - edges_x[ix]) * inv_scale;
      for (std::size_t ip = 0; ip < np; ++ip) {
        const double p0 = edges_p[ip] * inv_scale;
        const double wp = (edges_p[ip + 1] - edges_p[ip]) * inv_scale;
        const int sub = std::max(wx, wp) > options.refine_width * sigma ? 3 : 1;
        double acc = 0.0;
        for (int a = 0; a < sub; ++a) {
          const double x = x0 + wx * (a + 0.5) / sub;
          for (int b = 0; b < sub; ++b) {
            const double p = p0 + wp * (b + 0.5) / sub;
            acc += model_q(kind, std::hypot(x, p), params, options.chi);
          }
        }
        probs[ix * np + ip] = acc * wx * wp / double(sub * sub);
      }
    }
  });
  const double total = stable_sum(probs);
  if (!(total > 0.0)) {
    throw DomainError("degenerate geometry: model has no mass on the grid");
  }
  for (double& p : probs) p /= total;
  return probs;
}

double histogram_loglik(const Histogram2D& hist, QModelKind kind,
                        const QModelParams& params, const BinModelOptions& options) {
  const auto probs =
      predicted_bin_probs(kind, params, hist.edges_x, hist.edges_p, options);
  NeumaierSum acc;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (hist.counts[k] == 0) continue;
    acc += double(hist.counts[k]) * std::log(std::max(probs[k], kProbFloor));
  }
  return acc.value();
}

QFitResult fit_q(const Histogram2D& hist, double n_bar_fixed, double gain0,
                 double n_added0, const QFitOptions& options) {
  hist.validate();
  if (hist.in_range() < options.min_counts) {
    throw AdequacyError("fit_q: only " + std::to_string(hist.in_range()) +
                        " in-range counts, need >= " +
                        std::to_string(options.min_counts));
  }
  if (!(gain0 > 0.0) || !(n_added0 > 0.0)) {
    throw DomainError("fit_q: initial gain and n_added must be > 0");
  }
  QModelParams{n_bar_fixed, n_added0, gain0}.validate();

  gsl_set_error_handler_off();
  BinModelOptions bins;
  bins.chi = options.chi;
  FitContext ctx{&hist, options.kind, n_bar_fixed, bins};
  gsl_multimin_function fn{&negative_loglik, 2, &ctx};
  GslVector start(2), step(2);
  gsl_vector_set(start.v, 0, std::log(gain0));
  gsl_vector_set(start.v, 1, std::log1p(n_added0));
  gsl_vector_set(step.v, 0, 0.1);
  gsl_vector_set(step.v, 1, 0.1);

  GslMinimizer minimizer(2);
  if (gsl_multimin_fminimizer_set(minimizer.m, &fn, start.v, step.v) != GSL_SUCCESS) {
    throw NumericalError("fit_q: could not initialise the simplex");
  }
  QFitResult result;
  while (ctx.n_eval < options.max_eval) {
    if (gsl_multimin_fminimizer_iterate(minimizer.m) != GSL_SUCCESS) break;
    const double size = gsl_multimin_fminimizer_size(minimizer.m);
    if (gsl_multimin_test_size(size, options.size_tol) == GSL_SUCCESS) {
      result.converged = true;
      break;
    }
  }
  const QModelParams best = unpack(minimizer.m->x, n_bar_fixed);
  result.gain = best.gain;
  result.n_added = best.n_added;
  result.log_likelihood = -minimizer.m->fval;
  result.n_eval = ctx.n_eval;
  result.converged = result.converged && ctx.n_eval < options.max_eval;
  return result;
}

Linecut linecut(const Histogram2D& hist, Axis axis, std::size_t index) {
  hist.validate();
  if (index >= hist.n_bins) {
    throw DomainError("linecut: index " + std::to_string(index) + " out of range");
  }
  const auto& edges = axis == Axis::kX ? hist.edges_x : hist.edges_p;
  Linecut cut;
  for (std::size_t k = 0; k < hist.n_bins; ++k) {
    cut.centers.push_back(0.5 * (edges[k] + edges[k + 1]));
    cut.counts.push_back(axis == Axis::kX ? hist.at(k, index) : hist.at(index, k));
  }
  return cut;
}

ChiSquare pearson_chi2(const Histogram2D& hist, const std::vector<double>& probs,
                       double min_expected, std::size_t n_fitted) {
  hist.validate();
  if (probs.size() != hist.counts.size()) {
    throw DomainError("pearson_chi2: probability grid does not match histogram");
  }
  const double n = double(hist.in_range());
  NeumaierSum acc;
  std::size_t used = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double expected = n * probs[k];
    if (expected < min_expected) continue;
    const double d = double(hist.counts[k]) - expected;
    acc += d * d / expected;
    ++used;
  }
  ChiSquare out;
  out.chi2 = acc.value();
  out.dof = used > 1 + n_fitted ? used - 1 - n_fitted : 0;
  return out;
}

void to_json(nlohmann::json& j, const QFitResult& r) {
  j = nlohmann::json{{"gain", r.gain},
                     {"n_added", r.n_added},
                     {"loglik", r.log_likelihood},
                     {"converged", r.converged},
                     {"n_eval", r.n_eval}};
}

}  // namespace phonon_tomo
