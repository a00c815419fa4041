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
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "phonon_tomo/povm.hpp"
#include "phonon_tomo/sampler.hpp"
#include "phonon_tomo/states.hpp"

namespace phonon_tomo {

/// Half the l1 distance between two diagonal states of equal dimension.
double trace_distance_diagonal(const DiagonalState& a, const DiagonalState& b);

/// Sum_i p_i log Tr[Pi_i rho] with p_i the in-range empirical bin fractions.
/// Bins with p_i = 0 contribute nothing; an observed bin with zero predicted
/// probability throws NumericalError.
double loglik(const DiagonalState& state, const RadialHistogram& hist,
              const RadialPovmSet& povm);

/// Same as loglik, for bin fractions given directly (must sum to 1).
double loglik(const DiagonalState& state, std::span<const double> fractions,
              const RadialPovmSet& povm);

struct MaxLikOptions {
  double learning_rate = 1e-2;
  double stop = 1e-5;
  std::size_t max_iter = 50000;
  /// Starting point; the uniform state when unset.
  std::optional<DiagonalState> init;
};

struct ReconstructionResult {
  DiagonalState state = DiagonalState::vacuum(1);
  std::size_t iterations = 0;
  double final_loglik = 0.0;
  bool converged = false;
  double trace_distance_last = 0.0;
  /// Largest drop of the log-likelihood between successive iterates
  /// (0 when it never decreased).
  double max_loglik_drop = 0.0;
  /// Log-likelihood at every iterate, including the starting point.
  std::vector<double> loglik_trace;
};

/// Diluted iterative maximum likelihood restricted to diagonal states:
/// R_n = sum_i p_i Pi_i[n] / Tr[Pi_i rho], then
/// rho_n <- (1 + eps R_n)^2 rho_n, renormalized, until the trace distance
/// between successive iterates drops below `stop`.
ReconstructionResult reconstruct(std::span<const double> fractions,
                                 const RadialPovmSet& povm,
                                 const MaxLikOptions& options = {});
ReconstructionResult reconstruct(const RadialHistogram& hist,
                                 const RadialPovmSet& povm,
                                 const MaxLikOptions& options = {});

/// Everything needed to turn a raw dataset into a reconstruction.
struct PipelineConfig {
  std::vector<double> edges;
  /// Gain used to convert volts to alpha units; the dataset's own when unset.
  std::optional<double> gain;
  MaxLikOptions maxlik;
};

struct BootstrapTrial {
  std::uint64_t seed = 0;
  double n_bar = 0.0;
  double p_vac = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct BootstrapSummary {
  std::size_t n_trials = 0;
  std::size_t n_failed = 0;
  double mean_nbar = 0.0;
  double std_nbar = 0.0;
  double mean_pvac = 0.0;
  double std_pvac = 0.0;
  std::vector<BootstrapTrial> per_trial;
};

/// Seed of bootstrap trial k.
std::uint64_t bootstrap_trial_seed(std::uint64_t base_seed, std::size_t k);

/// Resamples the dataset n_trials times, bins and reconstructs each trial.
/// Non-converged trials are kept in per_trial but excluded from the
/// statistics (and counted in n_failed). Throws NumericalError when fewer
/// than two trials converge.
BootstrapSummary bootstrap_reconstruct(const QuadratureDataset& ds,
                                       const PipelineConfig& config,
                                       const RadialPovmSet& povm,
                                       std::size_t n_trials,
                                       std::uint64_t base_seed);

struct TomographyReport {
  double nbar_thermal = 0.0;
  double nbar_post = 0.0;
  double ratio = 0.0;
  double pvac_thermal = 0.0;
  double pvac_post = 0.0;
  double pvac_ratio = 0.0;
  std::optional<double> chi;
  /// 1 + chi when a herald fidelity is supplied.
  std::optional<double> expected_ratio;
};

TomographyReport report(const ReconstructionResult& thermal,
                        const ReconstructionResult& post,
                        std::optional<double> chi = std::nullopt);

void to_json(nlohmann::json& j, const ReconstructionResult& r);
void to_json(nlohmann::json& j, const BootstrapSummary& s);
void to_json(nlohmann::json& j, const TomographyReport& r);

}  // namespace phonon_tomo
