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

#include "phonon_tomo/maxlik.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "phonon_tomo/error.hpp"
#include "phonon_tomo/numeric.hpp"
#include "phonon_tomo/parallel.hpp"
#include "phonon_tomo/rng.hpp"

namespace phonon_tomo {

namespace {

void check_fractions(std::span<const double> fractions, const RadialPovmSet& povm) {
  if (fractions.size() != povm.n_bins()) {
    throw DomainError("bin count of data (" + std::to_string(fractions.size()) +
                      ") does not match POVM (" + std::to_string(povm.n_bins()) + ")");
  }
  for (double p : fractions) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw DomainError("bin fractions must be finite and >= 0");
    }
  }
  if (std::abs(stable_sum(fractions) - 1.0) > 1e-9) {
    throw DomainError("bin fractions must sum to 1");
  }
}

void check_edges_match(const RadialHistogram& hist, const RadialPovmSet& povm) {
  if (hist.edges != povm.edges()) {
    throw DomainError("histogram edges differ from POVM edges");
  }
}

// pred_i = sum_n M[i, n] rho_n, parallel over bins.
void forward(const std::vector<double>& m, std::size_t n_bins, std::size_t n_fock,
             std::span<const double> rho, std::vector<double>& pred) {
  parallel_for(n_bins, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double* row = m.data() + i * n_fock;
      double acc = 0.0;
      for (std::size_t n = 0; n < n_fock; ++n) acc += row[n] * rho[n];
      pred[i] = acc;
    }
  });
}

// r_n = sum_i w_i M[i, n], parallel over Fock chunks.
void adjoint(const std::vector<double>& m, std::size_t n_bins, std::size_t n_fock,
             const std::vector<double>& w, std::vector<double>& r) {
  parallel_for(n_fock, [&](std::size_t lo, std::size_t hi) {
    std::fill(r.begin() + std::ptrdiff_t(lo), r.begin() + std::ptrdiff_t(hi), 0.0);
    for (std::size_t i = 0; i < n_bins; ++i) {
      const double wi = w[i];
      if (wi == 0.0) continue;
      const double* row = m.data() + i * n_fock;
      for (std::size_t n = lo; n < hi; ++n) r[n] += wi * row[n];
    }
  });
}

double loglik_from_pred(std::span<const double> fractions,
                        const std::vector<double>& pred) {
  NeumaierSum acc;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] == 0.0) continue;
    if (!(pred[i] > 0.0)) {
      throw NumericalError("observed bin " + std::to_string(i) +
                           " has zero predicted probability");
    }
    acc += fractions[i] * std::log(pred[i]);
  }
  return acc.value();
}

double sample_std(const std::vector<double>& xs, double mean) {
  NeumaierSum acc;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc.value() / double(xs.size() - 1));
}

}  // namespace

double trace_distance_diagonal(const DiagonalState& a, const DiagonalState& b) {
  if (a.n_fock() != b.n_fock()) {
    throw DomainError("trace_distance_diagonal: dimension mismatch");
  }
  NeumaierSum acc;
  for (std::size_t n = 0; n < a.n_fock(); ++n) acc += std::abs(a[n] - b[n]);
  return 0.5 * acc.value();
}

double loglik(const DiagonalState& state, std::span<const double> fractions,
              const RadialPovmSet& povm) {
  check_fractions(fractions, povm);
  if (state.n_fock() != povm.n_fock()) {
    throw DomainError("loglik: state and POVM dimensions differ");
  }
  const auto m = povm.likelihood_matrix();
  std::vector<double> pred(povm.n_bins());
  forward(m, povm.n_bins(), povm.n_fock(), state.probs(), pred);
  return loglik_from_pred(fractions, pred);
}

double loglik(const DiagonalState& state, const RadialHistogram& hist,
              const RadialPovmSet& povm) {
  check_edges_match(hist, povm);
  const auto f = hist.fractions();
  return loglik(state, f, povm);
}

ReconstructionResult reconstruct(std::span<const double> fractions,
                                 const RadialPovmSet& povm,
                                 const MaxLikOptions& options) {
  check_fractions(fractions, povm);
  if (!(options.learning_rate > 0.0)) {
    throw DomainError("learning_rate must be > 0");
  }
  if (!(options.stop > 0.0)) throw DomainError("stop threshold must be > 0");
  const std::size_t n_bins = povm.n_bins();
  const std::size_t n_fock = povm.n_fock();
  if (options.init && options.init->n_fock() != n_fock) {
    throw DomainError("initial state dimension differs from POVM");
  }

  const auto m = povm.likelihood_matrix();
  std::vector<double> rho(n_fock, 1.0 / double(n_fock));
  if (options.init) rho.assign(options.init->probs().begin(), options.init->probs().end());
  std::vector<double> next(n_fock), pred(n_bins), weights(n_bins), r(n_fock);
  const double eps = options.learning_rate;

  ReconstructionResult result;
  forward(m, n_bins, n_fock, rho, pred);
  double ll = loglik_from_pred(fractions, pred);
  result.loglik_trace.push_back(ll);

  std::size_t iter = 0;
  double distance = std::numeric_limits<double>::infinity();
  while (iter < options.max_iter) {
    for (std::size_t i = 0; i < n_bins; ++i) {
      weights[i] = fractions[i] == 0.0 ? 0.0 : fractions[i] / pred[i];
    }
    adjoint(m, n_bins, n_fock, weights, r);

    NeumaierSum norm;
    for (std::size_t n = 0; n < n_fock; ++n) {
      const double g = 1.0 + eps * r[n];
      next[n] = g * g * rho[n];
      norm += next[n];
    }
    const double total = norm.value();
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw NumericalError("reconstruct: normalization lost at iteration " +
                           std::to_string(iter));
    }
    NeumaierSum dist;
    for (std::size_t n = 0; n < n_fock; ++n) {
      next[n] /= total;
      if (!(next[n] >= 0.0)) {
        throw NumericalError("reconstruct: invalid probability at iteration " +
                             std::to_string(iter));
      }
      dist += std::abs(next[n] - rho[n]);
    }
    rho.swap(next);
    ++iter;
    distance = 0.5 * dist.value();

    forward(m, n_bins, n_fock, rho, pred);
    const double ll_next = loglik_from_pred(fractions, pred);
    result.max_loglik_drop = std::max(result.max_loglik_drop, ll - ll_next);
    ll = ll_next;
    result.loglik_trace.push_back(ll);
    if (distance < options.stop) break;
  }

  result.state = DiagonalState(std::move(rho));
  result.iterations = iter;
  result.final_loglik = ll;
  result.trace_distance_last = distance;
  result.converged = distance < options.stop;
  return result;
}

ReconstructionResult reconstruct(const RadialHistogram& hist,
                                 const RadialPovmSet& povm,
                                 const MaxLikOptions& options) {
  check_edges_match(hist, povm);
  const auto f = hist.fractions();
  return reconstruct(f, povm, options);
}

std::uint64_t bootstrap_trial_seed(std::uint64_t base_seed, std::size_t k) {
  return CounterRng::mix(base_seed + 0x9e3779b97f4a7c15ULL * (std::uint64_t(k) + 1));
}

BootstrapSummary bootstrap_reconstruct(const QuadratureDataset& ds,
                                       const PipelineConfig& config,
                                       const RadialPovmSet& povm,
                                       std::size_t n_trials,
                                       std::uint64_t base_seed) {
  ds.validate();
  if (n_trials < 2) throw DomainError("bootstrap needs n_trials >= 2");
  BootstrapSummary summary;
  summary.n_trials = n_trials;
  summary.per_trial.resize(n_trials);
  parallel_for(n_trials, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      BootstrapTrial& trial = summary.per_trial[k];
      trial.seed = bootstrap_trial_seed(base_seed, k);
      const auto resampled = bootstrap_resample(ds, trial.seed);
      const auto hist = bin_radial(resampled, config.edges, config.gain);
      const auto rec = reconstruct(hist, povm, config.maxlik);
      trial.n_bar = mean_phonon(rec.state);
      trial.p_vac = rec.state[0];
      trial.iterations = rec.iterations;
      trial.converged = rec.converged;
    }
  });

  std::vector<double> nbars, pvacs;
  for (const auto& t : summary.per_trial) {
    if (!t.converged) {
      ++summary.n_failed;
      continue;
    }
    nbars.push_back(t.n_bar);
    pvacs.push_back(t.p_vac);
  }
  if (nbars.size() < 2) {
    throw NumericalError("bootstrap: fewer than two trials converged");
  }
  summary.mean_nbar = stable_sum(nbars) / double(nbars.size());
  summary.mean_pvac = stable_sum(pvacs) / double(pvacs.size());
  summary.std_nbar = sample_std(nbars, summary.mean_nbar);
  summary.std_pvac = sample_std(pvacs, summary.mean_pvac);
  return summary;
}

TomographyReport report(const ReconstructionResult& thermal,
                        const ReconstructionResult& post,
                        std::optional<double> chi) {
  TomographyReport rep;
  rep.nbar_thermal = mean_phonon(thermal.state);
  rep.nbar_post = mean_phonon(post.state);
  if (!(rep.nbar_thermal > 0.0)) {
    throw DomainError("report: thermal reconstruction has zero mean");
  }
  rep.ratio = rep.nbar_post / rep.nbar_thermal;
  rep.pvac_thermal = thermal.state[0];
  rep.pvac_post = post.state[0];
  rep.pvac_ratio = rep.pvac_thermal > 0.0 ? rep.pvac_post / rep.pvac_thermal : 0.0;
  if (chi) {
    if (!(*chi >= 0.0 && *chi <= 1.0)) throw DomainError("chi must lie in [0, 1]");
    rep.chi = chi;
    rep.expected_ratio = 1.0 + *chi;
  }
  return rep;
}

void to_json(nlohmann::json& j, const ReconstructionResult& r) {
  j = nlohmann::json{{"nbar", mean_phonon(r.state)},
                     {"pvac", r.state[0]},
                     {"iterations", r.iterations},
                     {"loglik", r.final_loglik},
                     {"converged", r.converged},
                     {"trace_distance_last", r.trace_distance_last}};
}

void to_json(nlohmann::json& j, const BootstrapSummary& s) {
  auto trials = nlohmann::json::array();
  for (const auto& t : s.per_trial) {
    trials.push_back({{"seed", t.seed},
                      {"nbar", t.n_bar},
                      {"pvac", t.p_vac},
                      {"iterations", t.iterations},
                      {"converged", t.converged}});
  }
  j = nlohmann::json{{"n_trials", s.n_trials}, {"n_failed", s.n_failed},
                     {"mean_nbar", s.mean_nbar}, {"std_nbar", s.std_nbar},
                     {"mean_pvac", s.mean_pvac}, {"std_pvac", s.std_pvac},
                     {"per_trial", trials}};
}

void to_json(nlohmann::json& j, const TomographyReport& r) {
  j = nlohmann::json{{"nbar_thermal", r.nbar_thermal}, {"nbar_post", r.nbar_post},
                     {"ratio", r.ratio},               {"pvac_thermal", r.pvac_thermal},
                     {"pvac_post", r.pvac_post},       {"pvac_ratio", r.pvac_ratio}};
  if (r.chi) j["chi"] = *r.chi;
  if (r.expected_ratio) j["expected_ratio"] = *r.expected_ratio;
}

}  // namespace phonon_tomo
