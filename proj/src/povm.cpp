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

#include "phonon_tomo/povm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "binary_io.hpp"
#include "phonon_tomo/error.hpp"
#include "phonon_tomo/numeric.hpp"
#include "phonon_tomo/parallel.hpp"
#include "phonon_tomo/sampler.hpp"

namespace phonon_tomo {

using detail::get_le;
using detail::put_le;

namespace {

constexpr double kLn10 = 2.302585092994046;
constexpr double kBig = 1e200;
constexpr double kSmall = 1e-200;

struct Node {
  double x;  // on [-1, 1]
  double w;
};

template <unsigned N>
std::vector<Node> legendre_nodes() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& xs = Rule::abscissa();
  const auto& ws = Rule::weights();
  std::vector<Node> nodes;
  // Boost stores the non-negative half; the zero node (odd N) comes first.
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k] == 0.0) {
      nodes.push_back({0.0, ws[k]});
    } else {
      nodes.push_back({-xs[k], ws[k]});
      nodes.push_back({xs[k], ws[k]});
    }
  }
  std::sort(nodes.begin(), nodes.end(), [](Node a, Node b) { return a.x < b.x; });
  return nodes;
}

std::vector<Node> gauss_legendre(std::size_t n) {
  switch (n) {
    case 4: return legendre_nodes<4>();
    case 8: return legendre_nodes<8>();
    case 16: return legendre_nodes<16>();
    case 32: return legendre_nodes<32>();
    default:
      throw DomainError("nodes_per_bin must be one of 4, 8, 16, 32; got " +
                        std::to_string(n));
  }
}

// Adds weight * <n|D(r) rho_th D^dagger(r)|n> to out[n] for all n.
//
// With t = n_added / (n_added + 1) and w_n = (1 - t) t^n exp(-r^2 (1 - t))
// L_n(-A), A = r^2 (1 - t)^2 / t, the Laguerre three-term recurrence becomes
//   w_{n+1} = [(t (2n + 1) + r^2 (1 - t)^2) w_n - n t^2 w_{n-1}] / (n + 1),
// which stays finite as t -> 0 (the Poisson limit). The running value is
// kept as mantissa * exp(log_scale) to survive n ~ 1e4 and r^2 ~ 1e5.
void accumulate_displaced(double r, double n_added, double weight,
                          std::span<double> out) {
  const double t = n_added / (n_added + 1.0);
  const double one_minus_t = 1.0 / (n_added + 1.0);
  const double r2 = r * r;
  const double drive = r2 * one_minus_t * one_minus_t;
  const double t2 = t * t;

  double log_scale = std::log(weight) + std::log(one_minus_t) - r2 * one_minus_t;
  double factor = std::exp(log_scale);
  double w_prev = 0.0;
  double w = 1.0;
  const std::size_t n_fock = out.size();
  for (std::size_t n = 0; n < n_fock; ++n) {
    if (factor > 0.0 && std::isfinite(factor)) {
      out[n] += w * factor;
    } else if (w > 0.0) {
      out[n] += std::exp(std::log(w) + log_scale);
    }
    const double dn = double(n);
    const double w_next = ((t * (2.0 * dn + 1.0) + drive) * w - dn * t2 * w_prev) / (dn + 1.0);
    w_prev = w;
    w = w_next;
    if (w > kBig) {
      w *= kSmall;
      w_prev *= kSmall;
      log_scale += 200.0 * kLn10;
      factor = std::exp(log_scale);
    } else if (w > 0.0 && w < kSmall) {
      w *= kBig;
      w_prev *= kBig;
      log_scale -= 200.0 * kLn10;
      factor = std::exp(log_scale);
    }
  }
}

double default_r_cut(double r_max, double n_added, std::size_t n_fock) {
  const auto top = fock_radial_spread(n_fock - 1, n_added);
  return std::max(r_max, top.mean + 12.0 * top.sd);
}

// Integrates 2 r <n|D rho_th D^dagger|n> over [lo, hi] into `row` using
// `panels` equal Gauss-Legendre panels.
void integrate_noisy(double lo, double hi, std::size_t panels,
                     const std::vector<Node>& nodes, double n_added,
                     std::span<double> row) {
  const double width = (hi - lo) / double(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = lo + width * double(p);
    const double half = width / 2.0;
    const double mid = a + half;
    for (const Node& node : nodes) {
      const double r = mid + half * node.x;
      if (r <= 0.0) continue;
      accumulate_displaced(r, n_added, 2.0 * r * node.w * half, row);
    }
  }
}

}  // namespace

RadialPovmSet::RadialPovmSet(std::vector<double> edges, double n_added,
                             std::size_t n_fock, double r_cut,
                             std::size_t n_valid, std::vector<double> elements)
    : edges_(std::move(edges)),
      n_added_(n_added),
      n_fock_(n_fock),
      r_cut_(r_cut),
      n_valid_(n_valid),
      elements_(std::move(elements)) {
  validate_radial_edges(edges_);
  if (n_fock_ == 0) throw DomainError("RadialPovmSet: n_fock must be >= 1");
  if (elements_.size() != (n_bins() + 1) * n_fock_) {
    throw DomainError("RadialPovmSet: element matrix has wrong size");
  }
  if (n_valid_ >= n_fock_) throw DomainError("RadialPovmSet: n_valid >= n_fock");
}

double RadialPovmSet::column_sum(std::size_t n) const {
  NeumaierSum acc;
  for (std::size_t i = 0; i <= n_bins(); ++i) acc += at(i, n);
  return acc.value();
}

double RadialPovmSet::completeness_error() const {
  double worst = 0.0;
  for (std::size_t n = 0; n <= n_valid_; ++n) {
    worst = std::max(worst, std::abs(column_sum(n) - 1.0));
  }
  return worst;
}

std::vector<double> RadialPovmSet::likelihood_matrix() const {
  std::vector<double> m(elements_.begin(),
                        elements_.begin() + std::ptrdiff_t(n_bins() * n_fock_));
  for (std::size_t n = n_valid_ + 1; n < n_fock_; ++n) {
    NeumaierSum acc;
    for (std::size_t i = 0; i < n_bins(); ++i) acc += m[i * n_fock_ + n];
    const double s = acc.value();
    if (s <= 0.0) continue;
    for (std::size_t i = 0; i < n_bins(); ++i) m[i * n_fock_ + n] /= s;
  }
  return m;
}

std::vector<double> RadialPovmSet::predict(std::span<const double> probs) const {
  if (probs.size() != n_fock_) throw DomainError("predict: dimension mismatch");
  std::vector<double> out(n_bins() + 1);
  for (std::size_t i = 0; i <= n_bins(); ++i) {
    const auto r = row(i);
    NeumaierSum acc;
    for (std::size_t n = 0; n < n_fock_; ++n) acc += r[n] * probs[n];
    out[i] = acc.value();
  }
  return out;
}

double noiseless_bin_element(std::size_t n, double r_lo, double r_hi) {
  if (!(r_lo >= 0.0) || !(r_hi > r_lo)) {
    throw DomainError("noiseless_bin_element: need 0 <= r_lo < r_hi");
  }
  const double a = double(n) + 1.0;
  const double x_lo = r_lo * r_lo;
  const auto p_lo = [&] { return x_lo == 0.0 ? 0.0 : boost::math::gamma_p(a, x_lo); };
  if (std::isinf(r_hi)) return x_lo == 0.0 ? 1.0 : boost::math::gamma_q(a, x_lo);
  const double x_hi = r_hi * r_hi;
  // Difference of the smaller tails avoids cancellation near 0 or 1.
  if (x_lo >= a) return boost::math::gamma_q(a, x_lo) - boost::math::gamma_q(a, x_hi);
  return boost::math::gamma_p(a, x_hi) - p_lo();
}

double noiseless_radial_density(std::size_t n, double r) {
  if (!(r >= 0.0)) throw DomainError("radius must be >= 0");
  if (r == 0.0) return 0.0;
  const double dn = double(n);
  return 2.0 * std::exp(-r * r + (2.0 * dn + 1.0) * std::log(r) - std::lgamma(dn + 1.0));
}

std::vector<double> displaced_thermal_diagonal(double r, double n_added,
                                               std::size_t n_fock) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("radius must be >= 0");
  if (!(n_added >= 0.0) || !std::isfinite(n_added)) {
    throw DomainError("n_added must be >= 0");
  }
  std::vector<double> out(n_fock, 0.0);
  accumulate_displaced(r, n_added, 1.0, out);
  return out;
}

RadialSpread fock_radial_spread(std::size_t n, double n_added) {
  // |alpha|^2 = |beta|^2 + |xi|^2 + 2 Re(beta xi*), with |beta|^2 ~ Gamma(n+1)
  // and xi complex Gaussian of mean square n_added.
  const double m = double(n) + 1.0;
  const double mean_sq = m + n_added;
  const double var_sq = m + n_added * n_added + 2.0 * m * n_added;
  const double mean = std::sqrt(mean_sq);
  return {mean, std::sqrt(var_sq) / (2.0 * mean)};
}

std::optional<std::size_t> valid_fock_bound(double r_max, double n_added,
                                            std::size_t n_fock) {
  auto fits = [&](std::size_t n) {
    const auto s = fock_radial_spread(n, n_added);
    return s.mean + 5.0 * s.sd < r_max;
  };
  if (n_fock == 0 || !fits(0)) return std::nullopt;
  // mean + 5 sd grows monotonically with n.
  std::size_t lo = 0, hi = n_fock - 1;
  if (fits(hi)) return hi;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

RadialPovmSet build_povm(const std::vector<double>& edges, double n_added,
                         std::size_t n_fock, const PovmOptions& options) {
  validate_radial_edges(edges);
  if (n_fock == 0) throw DomainError("build_povm: n_fock must be >= 1");
  if (!(n_added >= 0.0) || !std::isfinite(n_added)) {
    throw DomainError("build_povm: n_added must be >= 0");
  }
  const std::size_t n_bins = edges.size() - 1;
  const double r_max = edges.back();
  const auto n_valid = valid_fock_bound(r_max, n_added, n_fock);
  if (!n_valid) {
    throw DomainError("build_povm: radial range too small even for the vacuum");
  }
  const double r_cut = options.r_cut.value_or(default_r_cut(r_max, n_added, n_fock));
  if (!(r_cut >= r_max)) throw DomainError("build_povm: r_cut below r_max");

  std::vector<double> elements((n_bins + 1) * n_fock, 0.0);
  auto row = [&](std::size_t i) {
    return std::span<double>(elements.data() + i * n_fock, n_fock);
  };

  if (n_added == 0.0) {
    parallel_for(n_bins + 1, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        auto out = row(i);
        const double a = edges[std::min(i, n_bins)];
        const double b = i < n_bins ? edges[i + 1]
                                    : std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < n_fock; ++n) out[n] = noiseless_bin_element(n, a, b);
      }
    });
  } else {
    const auto nodes = gauss_legendre(options.nodes_per_bin);
    const double mean_width = r_max / double(n_bins);
    const std::size_t overflow_panels =
        r_cut > r_max
            ? std::max<std::size_t>(1, std::size_t(std::ceil((r_cut - r_max) / mean_width)))
            : 0;
    parallel_for(n_bins + 1, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        if (i < n_bins) {
          integrate_noisy(edges[i], edges[i + 1], 1, nodes, n_added, row(i));
        } else if (overflow_panels > 0) {
          integrate_noisy(r_max, r_cut, overflow_panels, nodes, n_added, row(i));
        }
      }
    });
  }

  for (double e : elements) {
    if (!(e >= 0.0) || !(e <= 1.0 + 1e-9)) {
      throw NumericalError("build_povm: element outside [0, 1]");
    }
  }
  RadialPovmSet povm(edges, n_added, n_fock, r_cut, *n_valid, std::move(elements));
  const double err = povm.completeness_error();
  if (err > options.completeness_tol) {
    std::ostringstream msg;
    msg << "build_povm: completeness error " << err << " exceeds tolerance "
        << options.completeness_tol << " for n <= " << *n_valid;
    throw NumericalError(msg.str());
  }
  return povm;
}

std::uint64_t edges_hash(const std::vector<double>& edges) {
  // FNV-1a over the IEEE bit patterns.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double e : edges) {
    const auto bits = std::bit_cast<std::uint64_t>(e);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void write_povm_cache(const RadialPovmSet& povm,
                      const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot open " + path.string() + " for writing");
  os.write("POV1", 4);
  put_le<std::uint64_t>(os, edges_hash(povm.edges()));
  put_le<double>(os, povm.n_added());
  put_le<std::uint64_t>(os, povm.n_fock());
  put_le<std::uint64_t>(os, povm.n_bins());
  put_le<double>(os, povm.r_cut());
  put_le<std::uint64_t>(os, povm.n_valid());
  for (double e : povm.edges()) put_le<double>(os, e);
  for (double e : povm.elements()) put_le<double>(os, e);
  if (!os) throw DomainError("write failed: " + path.string());
}

RadialPovmSet read_povm_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("cannot open " + path.string());
  std::array<char, 4> magic;
  is.read(magic.data(), 4);
  if (!is || std::string_view(magic.data(), 4) != "POV1") {
    throw DomainError(path.string() + ": not a POV1 cache file");
  }
  const auto hash = get_le<std::uint64_t>(is);
  const auto n_added = get_le<double>(is);
  const auto n_fock = get_le<std::uint64_t>(is);
  const auto n_bins = get_le<std::uint64_t>(is);
  const auto r_cut = get_le<double>(is);
  const auto n_valid = get_le<std::uint64_t>(is);
  const auto header_end = is.tellg();
  is.seekg(0, std::ios::end);
  const auto file_size = std::uint64_t(is.tellg());
  is.seekg(header_end);
  const std::uint64_t header = 4 + 6 * 8;
  if (!is || n_fock == 0 || n_bins == 0 || n_fock > file_size || n_bins > file_size ||
      file_size != header + 8 * ((n_bins + 1) + (n_bins + 1) * n_fock)) {
    throw DomainError(path.string() + ": truncated or corrupt POV1 file");
  }
  std::vector<double> edges(n_bins + 1);
  for (double& e : edges) e = get_le<double>(is);
  if (edges_hash(edges) != hash) {
    throw DomainError(path.string() + ": edges hash mismatch");
  }
  std::vector<double> elements((n_bins + 1) * n_fock);
  for (double& e : elements) e = get_le<double>(is);
  return RadialPovmSet(std::move(edges), n_added, n_fock, r_cut, n_valid,
                       std::move(elements));
}

std::optional<RadialPovmSet> load_povm_cache(const std::filesystem::path& path,
                                             const std::vector<double>& edges,
                                             double n_added, std::size_t n_fock) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto povm = read_povm_cache(path);
  if (edges_hash(povm.edges()) != edges_hash(edges) ||
      povm.n_added() != n_added || povm.n_fock() != n_fock) {
    return std::nullopt;
  }
  return povm;
}

}  // namespace phonon_tomo
