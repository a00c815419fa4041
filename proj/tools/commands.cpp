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

#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <vector>

#include "config.hpp"
#include "phonon_tomo/dynamics.hpp"
#include "phonon_tomo/error.hpp"
#include "phonon_tomo/maxlik.hpp"
#include "phonon_tomo/povm.hpp"
#include "phonon_tomo/qfit.hpp"
#include "phonon_tomo/sampler.hpp"
#include "phonon_tomo/states.hpp"

namespace phonon_tomo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::optional<double> nullable(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

void emit(const std::optional<fs::path>& out, const std::string& text) {
  if (!out) {
    std::cout << text;
    return;
  }
  std::ofstream os(*out, std::ios::binary);
  if (!os) throw DomainError("cannot write " + out->string());
  os << text;
  if (!os) throw DomainError("write failed: " + out->string());
}

fs::path require_out(const std::optional<fs::path>& out, const std::string& command) {
  if (!out) throw DomainError(command + " needs --out");
  return *out;
}

json envelope(const json& config) {
  return {{"config_hash", config_hash(config)}, {"config", config}};
}

void write_sidecar(const fs::path& artifact, const json& config, const json& extra) {
  json side = envelope(config);
  side["artifact"] = artifact.filename().string();
  side.update(extra);
  emit(fs::path(artifact.string() + ".json"), side.dump(2) + "\n");
}

QuadratureDataset load_dataset(const json& config) {
  const auto path = config.at("dataset").get<std::string>();
  if (path.empty()) throw DomainError("config key 'dataset' is required");
  if (fs::path(path).extension() == ".csv") {
    const auto gain = config.contains("gain") ? nullable(config.at("gain")) : std::nullopt;
    return read_dataset_csv(path, gain.value_or(1.0));
  }
  return read_dataset(path);
}

DetuningSide parse_side(const std::string& s) {
  if (s == "blue") return DetuningSide::kBlue;
  if (s == "red") return DetuningSide::kRed;
  throw DomainError("side must be 'blue' or 'red', got '" + s + "'");
}

QModelKind parse_model(const std::string& s) {
  if (s == "thermal") return QModelKind::kThermal;
  if (s == "added") return QModelKind::kAdded;
  if (s == "subtracted") return QModelKind::kSubtracted;
  if (s == "heralded") return QModelKind::kHeralded;
  throw DomainError("unknown model '" + s + "'");
}

std::size_t positive_size(const json& j, const char* name) {
  const auto v = j.get<long long>();
  if (v < 1) throw DomainError(std::string(name) + " must be >= 1");
  return static_cast<std::size_t>(v);
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const json& c, const std::optional<fs::path>& out) {
  const auto path = require_out(out, "simulate");
  const auto kind = parse_state_kind(c.at("state").get<std::string>());
  const auto count = c.at("count").get<long long>();
  if (count < 1) throw DomainError("sample count must be >= 1");
  SampleSpec spec;
  spec.n_bar = c.at("n_bar").get<double>();
  spec.n_added = c.at("n_added").get<double>();
  spec.gain = c.at("gain").get<double>();
  spec.count = static_cast<std::size_t>(count);
  spec.seed = c.at("seed").get<std::uint64_t>();
  const auto ds = kind == StateKind::kHeralded
                      ? sample_heralded(HeraldModel{c.at("chi").get<double>()}, spec)
                      : sample_state(kind, spec);
  const auto format = c.at("format").get<std::string>();
  if (format == "qds1") {
    write_dataset(ds, path);
  } else if (format == "csv") {
    write_dataset_csv(ds, path);
  } else {
    throw DomainError("format must be 'qds1' or 'csv'");
  }
  write_sidecar(path, c, {{"samples", ds.size()}, {"label", to_string(ds.label)}});
  return kOk;
}

// ------------------------------------------------------------------- fit-q

int cmd_fit_q(const json& c, const std::optional<fs::path>& out) {
  const auto ds = load_dataset(c);
  const auto hist = bin_2d(ds, positive_size(c.at("n_bins"), "n_bins"),
                           nullable(c.at("half_range")));
  QFitOptions opt;
  opt.kind = parse_model(c.at("model").get<std::string>());
  opt.chi = c.at("chi").get<double>();
  opt.max_eval = positive_size(c.at("max_eval"), "max_eval");
  opt.size_tol = c.at("size_tol").get<double>();
  opt.min_counts = c.at("min_counts").get<std::uint64_t>();
  const double n_bar = c.at("n_bar").get<double>();
  const auto fit = fit_q(hist, n_bar, c.at("gain0").get<double>(),
                         c.at("n_added0").get<double>(), opt);
  json j = envelope(c);
  j.update(json(fit));
  j["n_bar"] = n_bar;
  const auto probs = predicted_bin_probs(opt.kind, {n_bar, fit.n_added, fit.gain},
                                         hist.edges_x, hist.edges_p, {0.5, opt.chi});
  const auto chi2 = pearson_chi2(hist, probs, 5.0, 2);
  j["chi2_per_dof"] = chi2.per_dof();
  j["dof"] = chi2.dof;
  emit(out, j.dump(2) + "\n");
  return fit.converged ? kOk : kNumerical;
}

// -------------------------------------------------------------- build-povm

struct PovmSetup {
  std::vector<double> edges;
  double n_added;
  std::size_t n_fock;
  PovmOptions options;
};

PovmSetup povm_setup(const json& c, std::optional<std::vector<double>> edges) {
  PovmSetup s;
  const double n_bar = c.at("n_bar").get<double>();
  s.n_added = c.at("n_added").get<double>();
  if (!edges) {
    const double r_max =
        nullable(c.at("r_max")).value_or(default_r_max(n_bar, s.n_added));
    edges = uniform_edges(r_max, positive_size(c.at("n_bins"), "n_bins"));
  }
  s.edges = std::move(*edges);
  const auto n_fock = nullable(c.at("n_fock"));
  // Large enough for the post-selected state, whose mean is about 2 n_bar.
  s.n_fock = n_fock ? static_cast<std::size_t>(*n_fock) : default_n_fock(2.0 * n_bar);
  s.options.nodes_per_bin = positive_size(c.at("nodes_per_bin"), "nodes_per_bin");
  s.options.completeness_tol = c.at("completeness_tol").get<double>();
  return s;
}

int cmd_build_povm(const json& c, const std::optional<fs::path>& out) {
  const auto path = require_out(out, "build-povm");
  const auto s = povm_setup(c, std::nullopt);
  const auto povm = build_povm(s.edges, s.n_added, s.n_fock, s.options);
  write_povm_cache(povm, path);
  write_sidecar(path, c,
                {{"n_fock", povm.n_fock()},
                 {"n_bins", povm.n_bins()},
                 {"n_valid", povm.n_valid()},
                 {"r_cut", povm.r_cut()},
                 {"completeness_error", povm.completeness_error()}});
  return kOk;
}

// ------------------------------------------------- reconstruct / bootstrap

struct Tomography {
  std::optional<QuadratureDataset> dataset;
  RadialHistogram hist;
  std::optional<double> gain;
  RadialPovmSet povm;
  MaxLikOptions maxlik;
};

MaxLikOptions maxlik_options(const json& m) {
  MaxLikOptions o;
  o.learning_rate = m.at("learning_rate").get<double>();
  o.stop = m.at("stop").get<double>();
  o.max_iter = positive_size(m.at("max_iter"), "maxlik.max_iter");
  return o;
}

RadialPovmSet obtain_povm(const json& c, const PovmSetup& s) {
  const auto cache = c.at("povm").get<std::string>();
  if (!cache.empty()) {
    if (auto hit = load_povm_cache(cache, s.edges, s.n_added, s.n_fock)) return *hit;
  }
  auto povm = build_povm(s.edges, s.n_added, s.n_fock, s.options);
  if (!cache.empty()) write_povm_cache(povm, cache);
  return povm;
}

Tomography prepare_tomography(const json& c, bool need_dataset) {
  const auto hist_path = c.at("histogram").get<std::string>();
  std::optional<QuadratureDataset> ds;
  std::optional<RadialHistogram> hist;
  if (!hist_path.empty() && !need_dataset) {
    std::ifstream is(hist_path);
    if (!is) throw DomainError("cannot open " + hist_path);
    hist = json::parse(is).get<RadialHistogram>();
    hist->validate();
  } else {
    ds = load_dataset(c);
  }
  const auto s = povm_setup(c, hist ? std::optional(hist->edges) : std::nullopt);
  const auto gain = nullable(c.at("gain"));
  if (!hist) hist = bin_radial(*ds, s.edges, gain);
  return {std::move(ds), std::move(*hist), gain, obtain_povm(c, s),
          maxlik_options(c.at("maxlik"))};
}

json bootstrap_json(const Tomography& t, std::size_t n_trials, std::uint64_t seed) {
  PipelineConfig pipe;
  pipe.edges = t.povm.edges();
  pipe.gain = t.gain;
  pipe.maxlik = t.maxlik;
  const auto summary = bootstrap_reconstruct(*t.dataset, pipe, t.povm, n_trials, seed);
  json j = summary;
  j["flagged"] = summary.n_failed > 0;
  return j;
}

int cmd_reconstruct(const json& c, const std::optional<fs::path>& out) {
  const auto trials = c.at("bootstrap_trials").get<long long>();
  if (trials < 0 || trials == 1) throw DomainError("bootstrap_trials must be 0 or >= 2");
  const auto t = prepare_tomography(c, trials > 0);
  const auto rec = reconstruct(t.hist, t.povm, t.maxlik);
  json j = envelope(c);
  j.update(json(rec));
  j["n_valid"] = t.povm.n_valid();
  j["bootstrap"] = trials > 0 ? bootstrap_json(t, std::size_t(trials),
                                               c.at("seed").get<std::uint64_t>())
                              : json(nullptr);
  if (c.at("include_state").get<bool>()) {
    j["probs"] = std::vector<double>(rec.state.probs().begin(), rec.state.probs().end());
  }
  emit(out, j.dump(2) + "\n");
  if (!rec.converged) {
    std::cerr << error_json("numerical", "reconstruction did not converge within " +
                                             std::to_string(rec.iterations) +
                                             " iterations")
              << "\n";
    return kNumerical;
  }
  return kOk;
}

int cmd_bootstrap(const json& c, const std::optional<fs::path>& out) {
  const auto t = prepare_tomography(c, true);
  json j = envelope(c);
  j.update(bootstrap_json(t, positive_size(c.at("n_trials"), "n_trials"),
                          c.at("seed").get<std::uint64_t>()));
  emit(out, j.dump(2) + "\n");
  return kOk;
}

// ------------------------------------------------------------ delay-model

DeviceParams device_from(const json& d) {
  DeviceParams dev;
  dev.kappa = hz(d.at("kappa_hz").get<double>());
  dev.kappa_e = hz(d.at("kappa_e_hz").get<double>());
  dev.gamma_i = hz(d.at("gamma_i_hz").get<double>());
  dev.g0 = hz(d.at("g0_hz").get<double>());
  dev.omega_m = hz(d.at("omega_m_hz").get<double>());
  dev.n_cav = d.at("n_cav").get<double>();
  dev.validate();
  return dev;
}

std::string delay_csv(const json& c) {
  const auto dev = device_from(c.at("device"));
  const auto side = parse_side(c.at("side").get<std::string>());
  const double gamma = effective_linewidth(dev, side);
  const auto beta_hz = nullable(c.at("beta_hz"));
  const double beta = beta_hz ? hz(*beta_hz) : c.at("beta_over_gamma").get<double>() * gamma;
  const auto n_tau = positive_size(c.at("n_tau"), "n_tau");
  const double t0 = c.at("tau_min_s").get<double>(), t1 = c.at("tau_max_s").get<double>();
  if (!(t1 >= t0)) throw DomainError("tau_max_s must be >= tau_min_s");
  std::vector<double> taus(n_tau);
  for (std::size_t k = 0; k < n_tau; ++k) {
    taus[k] = n_tau == 1 ? t0 : t0 + (t1 - t0) * double(k) / double(n_tau - 1);
  }
  const auto curve =
      normalized_variance_curve(dev, beta, c.at("n_bar").get<double>(), taus,
                                c.at("shot_noise").get<bool>(),
                                c.at("alpha_lo").get<double>(), side);
  std::ostringstream os;
  os << "tau_s,variance_heralded,variance_thermal,ratio\n";
  for (const auto& p : curve) {
    os << fmt(p.tau) << ',' << fmt(p.heralded) << ',' << fmt(p.thermal) << ','
       << fmt(p.ratio) << '\n';
  }
  return os.str();
}

std::string hash_line(const json& config) {
  return "# config_hash=" + config_hash(config) + "\n";
}

int cmd_delay_model(const json& c, const std::optional<fs::path>& out) {
  emit(out, hash_line(c) + delay_csv(c));
  return kOk;
}

// -------------------------------------------------------------- freq-plan

int cmd_freq_plan(const json& c, const std::optional<fs::path>& out) {
  const auto side = c.at("side").get<std::string>();
  const double w = rf_frequency_plan(hz(c.at("omega_m_hz").get<double>()),
                                     hz(c.at("delta_if_hz").get<double>()),
                                     hz(c.at("omega_aom_hz").get<double>()),
                                     parse_side(side));
  json j = envelope(c);
  j["omega_rf_rad_s"] = w;
  j["f_rf_hz"] = w / (2.0 * std::numbers::pi);
  j["side"] = side;
  emit(out, j.dump(2) + "\n");
  return kOk;
}

// ----------------------------------------------------------- export-plots

QModelParams fit_params(const json& f, QModelKind& kind, double& chi) {
  QModelParams p{f.at("n_bar").get<double>(), f.at("n_added").get<double>(),
                 f.at("gain").get<double>()};
  kind = parse_model(f.at("model").get<std::string>());
  chi = f.at("chi").get<double>();
  const auto file = f.at("file").get<std::string>();
  if (!file.empty()) {
    std::ifstream is(file);
    if (!is) throw DomainError("cannot open " + file);
    const auto fitted = json::parse(is);
    p.gain = fitted.at("gain").get<double>();
    p.n_added = fitted.at("n_added").get<double>();
    if (fitted.contains("n_bar")) p.n_bar = fitted.at("n_bar").get<double>();
  }
  p.validate();
  return p;
}

std::string histogram2d_csv(const Histogram2D& h) {
  std::ostringstream os;
  os << "x_v,p_v,count\n";
  for (std::size_t ix = 0; ix < h.n_bins; ++ix) {
    const double x = 0.5 * (h.edges_x[ix] + h.edges_x[ix + 1]);
    for (std::size_t ip = 0; ip < h.n_bins; ++ip) {
      os << fmt(x) << ',' << fmt(0.5 * (h.edges_p[ip] + h.edges_p[ip + 1])) << ','
         << h.at(ix, ip) << '\n';
    }
  }
  return os.str();
}

std::string linecut_csv(const Histogram2D& h, QModelKind kind, const QModelParams& p,
                        double chi) {
  const std::size_t mid = h.n_bins / 2;
  const auto cut = linecut(h, Axis::kX, mid);
  const auto probs = predicted_bin_probs(kind, p, h.edges_x, h.edges_p, {0.5, chi});
  const double n = double(h.in_range());
  std::ostringstream os;
  os << "x_v,count,model_count\n";
  for (std::size_t k = 0; k < cut.centers.size(); ++k) {
    os << fmt(cut.centers[k]) << ',' << cut.counts[k] << ','
       << fmt(n * probs[k * h.n_bins + mid]) << '\n';
  }
  return os.str();
}

std::string radial_csv(const QuadratureDataset& ds, const json& c, QModelKind kind,
                       const QModelParams& p, double chi) {
  const double r_max = nullable(c.at("r_max")).value_or(default_r_max(p.n_bar, p.n_added));
  const auto edges = uniform_edges(r_max, positive_size(c.at("radial_bins"), "radial_bins"));
  const auto hist = bin_radial(ds, edges, p.gain);
  const double n = double(hist.in_range());
  std::ostringstream os;
  os << "r_center,empirical_density,model_density\n";
  constexpr int kSub = 16;
  for (std::size_t i = 0; i < hist.n_bins(); ++i) {
    const double lo = edges[i], w = edges[i + 1] - edges[i];
    double model = 0.0;
    for (int s = 0; s < kSub; ++s) {
      const double r = lo + w * (s + 0.5) / kSub;
      model += 2.0 * std::numbers::pi * r * model_q(kind, r, p, chi) / kSub;
    }
    os << fmt(lo + 0.5 * w) << ',' << fmt(double(hist.counts[i]) / (n * w)) << ','
       << fmt(model) << '\n';
  }
  return os.str();
}

std::string state_csv(const std::string& report_path) {
  if (report_path.empty()) throw DomainError("bundle 'state' needs config key 'report'");
  std::ifstream is(report_path);
  if (!is) throw DomainError("cannot open " + report_path);
  const auto report = json::parse(is);
  if (!report.contains("probs")) {
    throw DomainError(report_path + " has no 'probs'; rerun reconstruct with "
                                    "include_state=true");
  }
  std::ostringstream os;
  os << "n,p\n";
  const auto probs = report.at("probs").get<std::vector<double>>();
  for (std::size_t n = 0; n < probs.size(); ++n) os << n << ',' << fmt(probs[n]) << '\n';
  return os.str();
}

int cmd_export_plots(const json& c, const std::optional<fs::path>& out) {
  const auto dir = require_out(out, "export-plots");
  fs::create_directories(dir);
  const auto hash = hash_line(c);
  QModelKind kind;
  double chi;
  const auto params = fit_params(c.at("fit"), kind, chi);

  std::optional<QuadratureDataset> ds;
  std::optional<Histogram2D> h2;
  auto dataset = [&]() -> const QuadratureDataset& {
    if (!ds) ds = load_dataset(c);
    return *ds;
  };
  auto hist2d = [&]() -> const Histogram2D& {
    if (!h2) {
      h2 = bin_2d(dataset(), positive_size(c.at("n_bins_2d"), "n_bins_2d"),
                  nullable(c.at("half_range")));
    }
    return *h2;
  };

  json files = json::array();
  for (const auto& bundle : c.at("bundles")) {
    const auto name = bundle.get<std::string>();
    std::string body;
    if (name == "histogram2d") {
      body = histogram2d_csv(hist2d());
    } else if (name == "linecut") {
      body = linecut_csv(hist2d(), kind, params, chi);
    } else if (name == "radial") {
      body = radial_csv(dataset(), c, kind, params, chi);
    } else if (name == "delay") {
      body = delay_csv(c.at("delay"));
    } else if (name == "state") {
      body = state_csv(c.at("report").get<std::string>());
    } else {
      throw DomainError("unknown bundle '" + name + "'");
    }
    const auto file = name + ".csv";
    emit(dir / file, hash + body);
    files.push_back(file);
  }
  json manifest = envelope(c);
  manifest["files"] = files;
  emit(dir / "manifest.json", manifest.dump(2) + "\n");
  return kOk;
}

}  // namespace

std::string error_json(const std::string& kind, const std::string& message) {
  return json{{"error", {{"kind", kind}, {"message", message}}}}.dump();
}

int run_command(const std::string& command, const json& config,
                const std::optional<fs::path>& out) {
  if (command == "simulate") return cmd_simulate(config, out);
  if (command == "fit-q") return cmd_fit_q(config, out);
  if (command == "build-povm") return cmd_build_povm(config, out);
  if (command == "reconstruct") return cmd_reconstruct(config, out);
  if (command == "bootstrap") return cmd_bootstrap(config, out);
  if (command == "delay-model") return cmd_delay_model(config, out);
  if (command == "freq-plan") return cmd_freq_plan(config, out);
  if (command == "export-plots") return cmd_export_plots(config, out);
  throw DomainError("unknown command '" + command + "'");
}

}  // namespace phonon_tomo::cli
