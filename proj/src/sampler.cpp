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

#include "phonon_tomo/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "phonon_tomo/error.hpp"
#include "phonon_tomo/numeric.hpp"
#include "phonon_tomo/parallel.hpp"
#include "phonon_tomo/rng.hpp"

namespace phonon_tomo {

using detail::get_le;
using detail::put_le;

namespace {

// Slot layout per sample index. Every generator reads the same slots, so
// mixtures and their components share draws.
constexpr std::uint32_t kSlotBranch = 0;
constexpr std::uint32_t kSlotState = 1;  // uses 1..3
constexpr std::uint32_t kSlotNoise = 4;  // uses 4..5

std::complex<double> draw_thermal(const CounterRng& rng, std::uint64_t i,
                                  double n_bar) {
  double z0, z1;
  rng.normal_pair(i, kSlotState, z0, z1);
  const double sd = std::sqrt((n_bar + 1.0) / 2.0);
  return {sd * z0, sd * z1};
}

// |alpha|^2 ~ Gamma(2, n_bar + 1) as a sum of two exponentials, uniform phase.
std::complex<double> draw_added(const CounterRng& rng, std::uint64_t i,
                                double n_bar) {
  const double e = rng.exponential(i, kSlotState) + rng.exponential(i, kSlotState + 1);
  const double radius = std::sqrt((n_bar + 1.0) * e);
  const double phase = 2.0 * std::numbers::pi * rng.uniform(i, kSlotState + 2);
  return std::polar(radius, phase);
}

std::complex<double> draw_noise(const CounterRng& rng, std::uint64_t i,
                                double n_added) {
  if (n_added == 0.0) return {0.0, 0.0};
  double z0, z1;
  rng.normal_pair(i, kSlotNoise, z0, z1);
  const double sd = std::sqrt(n_added / 2.0);
  return {sd * z0, sd * z1};
}

void validate_spec(const SampleSpec& spec) {
  if (spec.count == 0) throw DomainError("sample count must be >= 1");
  if (!(spec.n_bar >= 0.0) || !std::isfinite(spec.n_bar)) {
    throw DomainError("n_bar must be finite and >= 0");
  }
  if (!(spec.n_added >= 0.0) || !std::isfinite(spec.n_added)) {
    throw DomainError("n_added must be finite and >= 0");
  }
  if (!(spec.gain > 0.0) || !std::isfinite(spec.gain)) {
    throw DomainError("gain must be finite and > 0");
  }
}

// `thermal_branch(rng, i)` is true when sample i is drawn from the thermal
// component, false for the phonon-added component.
template <class Branch>
QuadratureDataset generate(const SampleSpec& spec, StateKind label,
                           Branch&& thermal_branch) {
  validate_spec(spec);
  const CounterRng rng(spec.seed);
  QuadratureDataset ds;
  ds.gain = spec.gain;
  ds.seed = spec.seed;
  ds.label = label;
  ds.samples.resize(spec.count);
  const double scale = std::sqrt(spec.gain);
  parallel_for(spec.count, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::complex<double> alpha =
          thermal_branch(rng, i) ? draw_thermal(rng, i, spec.n_bar)
                                 : draw_added(rng, i, spec.n_bar);
      ds.samples[i] = scale * (alpha + draw_noise(rng, i, spec.n_added));
    }
  });
  return ds;
}

void check_edges_increasing(const std::vector<double>& edges, const char* what) {
  if (edges.size() < 2) throw DomainError(std::string(what) + ": need >= 2 edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) {
      throw DomainError(std::string(what) + ": non-finite edge");
    }
    if (i > 0 && !(edges[i] > edges[i - 1])) {
      throw DomainError(std::string(what) + ": edges must increase strictly");
    }
  }
}

}  // namespace

std::string_view to_string(StateKind kind) {
  switch (kind) {
    case StateKind::kThermal: return "thermal";
    case StateKind::kAdded: return "added";
    case StateKind::kSubtracted: return "subtracted";
    case StateKind::kHeralded: return "heralded";
  }
  throw DomainError("unknown state kind");
}

StateKind parse_state_kind(std::string_view name) {
  if (name == "thermal") return StateKind::kThermal;
  if (name == "added") return StateKind::kAdded;
  if (name == "subtracted") return StateKind::kSubtracted;
  if (name == "heralded") return StateKind::kHeralded;
  throw DomainError("unknown state kind '" + std::string(name) + "'");
}

void QuadratureDataset::validate() const {
  if (samples.empty()) throw DomainError("dataset is empty");
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    throw DomainError("dataset gain must be finite and > 0");
  }
}

HeraldModel HeraldModel::from_rates(double rate_sig, double rate_dark) {
  if (!(rate_sig >= 0.0) || !(rate_dark >= 0.0) || rate_sig + rate_dark <= 0.0) {
    throw DomainError("herald rates must be >= 0 and not both zero");
  }
  return HeraldModel{rate_sig / (rate_sig + rate_dark)};
}

void HeraldModel::validate() const {
  if (!(chi >= 0.0 && chi <= 1.0)) {
    throw DomainError("herald fidelity chi must lie in [0, 1]");
  }
}

QuadratureDataset sample_state(StateKind kind, const SampleSpec& spec) {
  switch (kind) {
    case StateKind::kThermal:
      return generate(spec, kind, [](const CounterRng&, std::uint64_t) { return true; });
    case StateKind::kAdded:
      return generate(spec, kind, [](const CounterRng&, std::uint64_t) { return false; });
    case StateKind::kSubtracted: {
      // rho_s = (rho_th + n_bar rho_a) / (n_bar + 1)
      const double p_thermal = 1.0 / (spec.n_bar + 1.0);
      return generate(spec, kind, [p_thermal](const CounterRng& rng, std::uint64_t i) {
        return rng.uniform(i, kSlotBranch) < p_thermal;
      });
    }
    case StateKind::kHeralded:
      break;
  }
  throw DomainError("sample_state: kind must be thermal, added or subtracted");
}

QuadratureDataset sample_heralded(const HeraldModel& herald,
                                  const SampleSpec& spec) {
  herald.validate();
  const double chi = herald.chi;
  return generate(spec, StateKind::kHeralded,
                  [chi](const CounterRng& rng, std::uint64_t i) {
                    return !(rng.uniform(i, kSlotBranch) < chi);
                  });
}

QuadratureDataset bootstrap_resample(const QuadratureDataset& ds,
                                     std::uint64_t trial_seed) {
  ds.validate();
  const CounterRng rng(trial_seed);
  QuadratureDataset out;
  out.gain = ds.gain;
  out.seed = trial_seed;
  out.label = ds.label;
  out.samples.resize(ds.size());
  const std::uint64_t n = ds.size();
  parallel_for(ds.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      out.samples[i] = ds.samples[rng.below(n, i, 0)];
    }
  });
  return out;
}

void Histogram2D::validate() const {
  if (n_bins == 0) throw DomainError("Histogram2D: n_bins must be >= 1");
  if (edges_x.size() != n_bins + 1 || edges_p.size() != n_bins + 1) {
    throw DomainError("Histogram2D: edge count must be n_bins + 1");
  }
  check_edges_increasing(edges_x, "Histogram2D");
  check_edges_increasing(edges_p, "Histogram2D");
  if (counts.size() != n_bins * n_bins) {
    throw DomainError("Histogram2D: counts must have n_bins^2 entries");
  }
  std::uint64_t in = 0;
  for (auto c : counts) in += c;
  if (in + out_of_range != total) {
    throw DomainError("Histogram2D: counts + out_of_range != total");
  }
}

double default_half_range(const QuadratureDataset& ds) {
  ds.validate();
  NeumaierSum sx, sp, sxx, spp;
  for (const auto& v : ds.samples) {
    sx += v.real();
    sp += v.imag();
  }
  const double n = double(ds.size());
  const double mx = sx.value() / n, mp = sp.value() / n;
  for (const auto& v : ds.samples) {
    sxx += (v.real() - mx) * (v.real() - mx);
    spp += (v.imag() - mp) * (v.imag() - mp);
  }
  const double pooled = std::sqrt((sxx.value() + spp.value()) / (2.0 * n));
  if (!(pooled > 0.0)) {
    throw DomainError("default_half_range: dataset has zero spread");
  }
  return 4.0 * pooled;
}

Histogram2D bin_2d(const QuadratureDataset& ds, std::size_t n_bins,
                   std::optional<double> half_range) {
  ds.validate();
  if (n_bins == 0 || n_bins % 2 == 0) {
    throw DomainError("bin_2d: n_bins must be odd");
  }
  const double h = half_range ? *half_range : default_half_range(ds);
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw DomainError("bin_2d: half_range must be finite and > 0");
  }
  Histogram2D hist;
  hist.n_bins = n_bins;
  hist.edges_x.resize(n_bins + 1);
  for (std::size_t k = 0; k <= n_bins; ++k) {
    hist.edges_x[k] = -h + 2.0 * h * double(k) / double(n_bins);
  }
  hist.edges_p = hist.edges_x;
  hist.counts.assign(n_bins * n_bins, 0);
  hist.total = ds.size();

  const double width = 2.0 * h / double(n_bins);
  auto cell = [&](double x) -> std::optional<std::size_t> {
    if (!(x >= -h && x <= h)) return std::nullopt;
    auto k = static_cast<std::size_t>((x + h) / width);
    return std::min(k, n_bins - 1);
  };

  std::mutex merge_mutex;
  parallel_for(ds.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint64_t> local(n_bins * n_bins, 0);
    std::uint64_t local_out = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto ix = cell(ds.samples[i].real());
      const auto ip = cell(ds.samples[i].imag());
      if (ix && ip) {
        ++local[*ix * n_bins + *ip];
      } else {
        ++local_out;
      }
    }
    std::lock_guard lock(merge_mutex);
    for (std::size_t k = 0; k < local.size(); ++k) hist.counts[k] += local[k];
    hist.out_of_range += local_out;
  });
  return hist;
}

std::vector<double> RadialHistogram::fractions() const {
  const std::uint64_t n = in_range();
  if (n == 0) throw DomainError("RadialHistogram has no in-range counts");
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) p[i] = double(counts[i]) / double(n);
  return p;
}

void validate_radial_edges(const std::vector<double>& edges) {
  check_edges_increasing(edges, "radial edges");
  if (edges.front() != 0.0) throw DomainError("radial edges must start at 0");
}

void RadialHistogram::validate() const {
  validate_radial_edges(edges);
  if (counts.size() + 1 != edges.size()) {
    throw DomainError("RadialHistogram: counts must have edges.size() - 1 entries");
  }
  std::uint64_t in = 0;
  for (auto c : counts) in += c;
  if (in + overflow != total) {
    throw DomainError("RadialHistogram: counts + overflow != total");
  }
}

std::vector<double> uniform_edges(double r_max, std::size_t n_bins) {
  if (!(r_max > 0.0) || n_bins == 0) {
    throw DomainError("uniform_edges: need r_max > 0 and n_bins >= 1");
  }
  std::vector<double> edges(n_bins + 1);
  for (std::size_t k = 0; k <= n_bins; ++k) {
    edges[k] = r_max * double(k) / double(n_bins);
  }
  return edges;
}

double default_r_max(double n_bar, double n_added) {
  return 5.0 * std::sqrt(n_bar + 1.0 + n_added);
}

RadialHistogram bin_radial(const QuadratureDataset& ds,
                           const std::vector<double>& edges,
                           std::optional<double> gain_override) {
  ds.validate();
  validate_radial_edges(edges);
  const double gain = gain_override.value_or(ds.gain);
  if (!(gain > 0.0)) throw DomainError("bin_radial: gain must be > 0");
  const double inv_scale = 1.0 / std::sqrt(gain);

  RadialHistogram hist;
  hist.edges = edges;
  hist.counts.assign(edges.size() - 1, 0);
  hist.total = ds.size();
  const double r_max = edges.back();

  std::mutex merge_mutex;
  parallel_for(ds.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint64_t> local(hist.counts.size(), 0);
    std::uint64_t local_over = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double r = std::abs(ds.samples[i]) * inv_scale;
      if (!(r < r_max)) {
        ++local_over;
        continue;
      }
      // First edge strictly greater than r closes the bin.
      const auto it = std::upper_bound(edges.begin(), edges.end(), r);
      ++local[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
    std::lock_guard lock(merge_mutex);
    for (std::size_t k = 0; k < local.size(); ++k) hist.counts[k] += local[k];
    hist.overflow += local_over;
  });
  return hist;
}

void write_dataset(const QuadratureDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot open " + path.string() + " for writing");
  os.write("QDS1", 4);
  put_le<std::uint64_t>(os, ds.size());
  put_le<double>(os, ds.gain);
  put_le<std::uint64_t>(os, ds.seed);
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(ds.label));
  for (const auto& v : ds.samples) {
    put_le<double>(os, v.real());
    put_le<double>(os, v.imag());
  }
  if (!os) throw DomainError("write failed: " + path.string());
}

QuadratureDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("cannot open " + path.string());
  std::array<char, 4> magic;
  is.read(magic.data(), 4);
  if (!is || std::string_view(magic.data(), 4) != "QDS1") {
    throw DomainError(path.string() + ": not a QDS1 dataset");
  }
  QuadratureDataset ds;
  const auto count = get_le<std::uint64_t>(is);
  ds.gain = get_le<double>(is);
  ds.seed = get_le<std::uint64_t>(is);
  const auto label = get_le<std::uint8_t>(is);
  if (label > 3) throw DomainError(path.string() + ": bad label byte");
  ds.label = static_cast<StateKind>(label);
  ds.samples.resize(count);
  for (auto& v : ds.samples) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    v = {re, im};
  }
  ds.validate();
  return ds;
}

void write_dataset_csv(const QuadratureDataset& ds,
                       const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DomainError("cannot open " + path.string() + " for writing");
  os << "re,im\n";
  os.precision(17);
  for (const auto& v : ds.samples) os << v.real() << ',' << v.imag() << '\n';
}

QuadratureDataset read_dataset_csv(const std::filesystem::path& path,
                                   double gain) {
  std::ifstream is(path);
  if (!is) throw DomainError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "re,im") {
    throw DomainError(path.string() + ": expected header 're,im'");
  }
  QuadratureDataset ds;
  ds.gain = gain;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DomainError(path.string() + ": malformed row '" + line + "'");
    }
    ds.samples.emplace_back(std::stod(line.substr(0, comma)),
                            std::stod(line.substr(comma + 1)));
  }
  ds.validate();
  return ds;
}

void to_json(nlohmann::json& j, const Histogram2D& h) {
  j = nlohmann::json{{"n_bins", h.n_bins},     {"edges_x", h.edges_x},
                     {"edges_p", h.edges_p},   {"counts", h.counts},
                     {"out_of_range", h.out_of_range}, {"total", h.total}};
}

void from_json(const nlohmann::json& j, Histogram2D& h) {
  h.n_bins = j.at("n_bins").get<std::size_t>();
  h.edges_x = j.at("edges_x").get<std::vector<double>>();
  h.edges_p = j.at("edges_p").get<std::vector<double>>();
  h.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  h.out_of_range = j.at("out_of_range").get<std::uint64_t>();
  h.total = j.at("total").get<std::uint64_t>();
  h.validate();
}

void to_json(nlohmann::json& j, const RadialHistogram& h) {
  j = nlohmann::json{{"edges", h.edges},
                     {"counts", h.counts},
                     {"overflow", h.overflow},
                     {"total", h.total}};
}

void from_json(const nlohmann::json& j, RadialHistogram& h) {
  h.edges = j.at("edges").get<std::vector<double>>();
  h.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  h.overflow = j.at("overflow").get<std::uint64_t>();
  h.total = j.at("total").get<std::uint64_t>();
  h.validate();
}

}  // namespace phonon_tomo
