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
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace phonon_tomo {

/// Binned, phase-averaged heterodyne POVM. Every element is diagonal in the
/// Fock basis, so the set is a dense (n_bins + 1) x n_fock matrix: rows
/// 0..n_bins-1 are the annuli given by `edges` (alpha units), and the last
/// row is the overflow annulus [edges.back(), r_cut].
///
/// Columns sum to one over all rows (within the completeness tolerance) for
/// every Fock level n <= n_valid, the last level whose radial distribution
/// sits inside the binned range.
class RadialPovmSet {
 public:
  RadialPovmSet(std::vector<double> edges, double n_added, std::size_t n_fock,
                double r_cut, std::size_t n_valid, std::vector<double> elements);

  std::size_t n_bins() const { return edges_.size() - 1; }
  std::size_t n_fock() const { return n_fock_; }
  std::size_t n_valid() const { return n_valid_; }
  double n_added() const { return n_added_; }
  double r_cut() const { return r_cut_; }
  const std::vector<double>& edges() const { return edges_; }

  /// Element <n|Pi_i|n>; i == n_bins() addresses the overflow row.
  double at(std::size_t bin, std::size_t n) const {
    return elements_[bin * n_fock_ + n];
  }
  std::span<const double> row(std::size_t bin) const {
    return {elements_.data() + bin * n_fock_, n_fock_};
  }
  std::span<const double> overflow_row() const { return row(n_bins()); }
  /// Full (n_bins + 1) x n_fock row-major matrix.
  std::span<const double> elements() const { return elements_; }

  /// Sum over all rows, including overflow, for Fock level n.
  double column_sum(std::size_t n) const;
  /// Largest |column_sum(n) - 1| over n <= n_valid.
  double completeness_error() const;

  /// In-range rows only, as used by the likelihood: columns beyond n_valid
  /// are rescaled so that they sum to one over the in-range bins.
  std::vector<double> likelihood_matrix() const;

  /// Born probabilities Tr[Pi_i rho] for the in-range bins plus overflow.
  std::vector<double> predict(std::span<const double> probs) const;

 private:
  std::vector<double> edges_;
  double n_added_;
  std::size_t n_fock_;
  double r_cut_;
  std::size_t n_valid_;
  std::vector<double> elements_;
};

struct PovmOptions {
  /// Gauss-Legendre nodes per bin for the noisy path.
  std::size_t nodes_per_bin = 8;
  double completeness_tol = 1e-6;
  /// Upper limit of the overflow annulus; derived from n_fock when unset.
  std::optional<double> r_cut;
};

/// <n|Pi_RS integrated over [r_lo, r_hi]|n> without noise:
/// P(n + 1, r_hi^2) - P(n + 1, r_lo^2), P the regularized lower incomplete
/// gamma function. r_hi may be +infinity.
double noiseless_bin_element(std::size_t n, double r_lo, double r_hi);

/// Integrand of the noiseless radial POVM, 2 exp(-r^2) r^(2n+1) / n!.
double noiseless_radial_density(std::size_t n, double r);

/// Photon-number distribution <n|D(r) rho_th D^dagger(r)|n>, n < n_fock, of
/// a thermal state with mean n_added displaced by the real amplitude r.
/// n_added == 0 gives the Poisson distribution of a coherent state.
std::vector<double> displaced_thermal_diagonal(double r, double n_added,
                                               std::size_t n_fock);

/// Mean and spread of the measured radius for Fock level n with noise
/// n_added (moments of |alpha|^2, propagated to r).
struct RadialSpread {
  double mean;
  double sd;
};
RadialSpread fock_radial_spread(std::size_t n, double n_added);

/// Largest n < n_fock with mean + 5 sd of its measured radius below r_max,
/// or nullopt when even the vacuum spills over.
std::optional<std::size_t> valid_fock_bound(double r_max, double n_added,
                                            std::size_t n_fock);

/// Builds the binned POVM for the given edges. n_added == 0 uses the closed
/// form; otherwise each bin is integrated by Gauss-Legendre quadrature of
/// 2 r <n|D(r) rho_th D^dagger(r)|n>. Throws NumericalError when
/// completeness fails for n <= n_valid.
RadialPovmSet build_povm(const std::vector<double>& edges, double n_added,
                         std::size_t n_fock, const PovmOptions& options = {});

// POVM cache files: "POV1", u64 edges hash, f64 n_added, u64 n_fock,
// u64 n_bins, f64 r_cut, u64 n_valid, f64 edges[n_bins + 1],
// f64 elements[(n_bins + 1) * n_fock]; all little endian.
std::uint64_t edges_hash(const std::vector<double>& edges);
void write_povm_cache(const RadialPovmSet& povm,
                      const std::filesystem::path& path);
RadialPovmSet read_povm_cache(const std::filesystem::path& path);
/// Returns the cached set when the file exists and its key
/// (edges hash, n_added, n_fock) matches; nullopt otherwise.
std::optional<RadialPovmSet> load_povm_cache(const std::filesystem::path& path,
                                             const std::vector<double>& edges,
                                             double n_added, std::size_t n_fock);

}  // namespace phonon_tomo
