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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace phonon_tomo {

enum class StateKind : std::uint8_t {
  kThermal = 0,
  kAdded = 1,
  kSubtracted = 2,
  kHeralded = 3,
};

std::string_view to_string(StateKind kind);
/// Parses "thermal", "added", "subtracted" or "heralded".
StateKind parse_state_kind(std::string_view name);

/// Complex heterodyne samples v = sqrt(G) (X + iP), in volts.
struct QuadratureDataset {
  std::vector<std::complex<double>> samples;
  double gain = 1.0;
  std::uint64_t seed = 0;
  StateKind label = StateKind::kThermal;

  std::size_t size() const { return samples.size(); }
  void validate() const;
};

/// Herald fidelity: probability that a click came from a real sideband
/// photon rather than a dark count.
struct HeraldModel {
  double chi = 1.0;

  static HeraldModel from_rates(double rate_sig, double rate_dark);
  void validate() const;
};

/// Parameters shared by all dataset generators.
struct SampleSpec {
  double n_bar = 0.0;
  double n_added = 0.0;
  double gain = 1.0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

/// Draws `count` samples of the given state (thermal, added or subtracted)
/// with Gaussian technical noise. Sample i depends only on (seed, i).
QuadratureDataset sample_state(StateKind kind, const SampleSpec& spec);

/// Heralded post-selection with imperfect fidelity: each sample comes from
/// the phonon-added state with probability chi, otherwise from the thermal
/// state. With chi = 1 the output is bit-identical to sample_state(kAdded).
QuadratureDataset sample_heralded(const HeraldModel& herald,
                                  const SampleSpec& spec);

/// Same length, drawn with replacement; deterministic in trial_seed.
QuadratureDataset bootstrap_resample(const QuadratureDataset& ds,
                                     std::uint64_t trial_seed);

/// Square 2D histogram over (Re v, Im v), in volts.
struct Histogram2D {
  std::size_t n_bins = 0;
  std::vector<double> edges_x;
  std::vector<double> edges_p;
  std::vector<std::uint64_t> counts;  // row-major, index ix * n_bins + ip
  std::uint64_t out_of_range = 0;
  std::uint64_t total = 0;

  std::uint64_t at(std::size_t ix, std::size_t ip) const {
    return counts[ix * n_bins + ip];
  }
  std::uint64_t in_range() const { return total - out_of_range; }
  void validate() const;
};

/// Default half range: 4 times the pooled per-quadrature sample std.
double default_half_range(const QuadratureDataset& ds);

/// Bins the dataset on an n_bins x n_bins grid over [-half_range, half_range]^2
/// (volts). n_bins must be odd so the centre cell sits on the origin.
Histogram2D bin_2d(const QuadratureDataset& ds, std::size_t n_bins = 101,
                   std::optional<double> half_range = std::nullopt);

/// Annular histogram of |v| / sqrt(gain), in alpha units.
struct RadialHistogram {
  std::vector<double> edges;  // edges.front() == 0
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow = 0;
  std::uint64_t total = 0;

  std::size_t n_bins() const { return counts.size(); }
  std::uint64_t in_range() const { return total - overflow; }
  /// Empirical in-range bin fractions p_i (sum to 1).
  std::vector<double> fractions() const;
  void validate() const;
};

/// Validates radial edges: starts at 0, strictly increasing, finite.
void validate_radial_edges(const std::vector<double>& edges);

/// Uniform edges from 0 to r_max with n_bins bins.
std::vector<double> uniform_edges(double r_max, std::size_t n_bins);

/// 5 sqrt(n_bar + 1 + n_added), the default radial range in alpha units.
double default_r_max(double n_bar, double n_added);

/// Counts |v| / sqrt(gain) per annulus. gain_override replaces the dataset's
/// own gain (e.g. with a fitted value).
RadialHistogram bin_radial(const QuadratureDataset& ds,
                           const std::vector<double>& edges,
                           std::optional<double> gain_override = std::nullopt);

// Dataset files. Binary layout, little endian: "QDS1", u64 count, f64 gain,
// u64 seed, u8 label, then count (f64 re, f64 im) pairs.
void write_dataset(const QuadratureDataset& ds, const std::filesystem::path& path);
QuadratureDataset read_dataset(const std::filesystem::path& path);
/// CSV with header "re,im"; gain/seed/label are not stored.
void write_dataset_csv(const QuadratureDataset& ds,
                       const std::filesystem::path& path);
QuadratureDataset read_dataset_csv(const std::filesystem::path& path,
                                   double gain);

void to_json(nlohmann::json& j, const Histogram2D& h);
void from_json(const nlohmann::json& j, Histogram2D& h);
void to_json(nlohmann::json& j, const RadialHistogram& h);
void from_json(const nlohmann::json& j, RadialHistogram& h);

}  // namespace phonon_tomo
