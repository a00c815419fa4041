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

#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "phonon_tomo/dynamics.hpp"
#include "phonon_tomo/error.hpp"

using namespace phonon_tomo;

namespace {

DeviceParams driven(double n_cav) {
  DeviceParams dev;
  dev.n_cav = n_cav;
  return dev;
}

std::vector<LinewidthPoint> synthetic_linewidths(const DeviceParams& base,
                                                 DetuningSide side) {
  std::vector<LinewidthPoint> pts;
  for (int k = 0; k < 10; ++k) {
    auto dev = base;
    dev.n_cav = 40.0 * k;
    pts.push_back({dev.n_cav, effective_linewidth(dev, side)});
  }
  return pts;
}

}  // namespace

TEST_CASE("gamma_om examples") {
  CHECK(gamma_om(driven(0.0)) == 0.0);
  // 4 (1.01 MHz)^2 100 / 822 MHz, in units of 2 pi MHz.
  CHECK(gamma_om(driven(100.0)) / hz(1e6) ==
        doctest::Approx(4.0 * 1.01 * 1.01 * 100.0 / 822.0).epsilon(1e-14));
  CHECK(gamma_om(driven(100.0)) / hz(1e6) == doctest::Approx(0.4964).epsilon(1e-4));
  CHECK(gamma_om(driven(200.0)) == doctest::Approx(2.0 * gamma_om(driven(100.0))));
  auto bad = driven(1.0);
  bad.kappa_e = 2.0 * bad.kappa;
  CHECK_THROWS_AS(gamma_om(bad), DomainError);
  bad = driven(-1.0);
  CHECK_THROWS_AS(gamma_om(bad), DomainError);
  bad = driven(1.0);
  bad.g0 = 0.0;
  CHECK_THROWS_AS(gamma_om(bad), DomainError);
}

TEST_CASE("effective_linewidth examples and properties") {
  const auto idle = driven(0.0);
  CHECK(effective_linewidth(idle, DetuningSide::kBlue) == idle.gamma_i);
  CHECK(effective_linewidth(idle, DetuningSide::kRed) == idle.gamma_i);
  for (double n : {10.0, 100.0, 300.0}) {
    const auto dev = driven(n);
    const double blue = effective_linewidth(dev, DetuningSide::kBlue);
    const double red = effective_linewidth(dev, DetuningSide::kRed);
    CHECK(blue < dev.gamma_i);
    CHECK(red > dev.gamma_i);
    CHECK(blue + red == doctest::Approx(2.0 * dev.gamma_i).epsilon(1e-14));
  }
  // gamma_om reaches gamma_i near n_cav = 415.
  CHECK_THROWS_AS(effective_linewidth(driven(500.0), DetuningSide::kBlue), DomainError);
  CHECK_NOTHROW(effective_linewidth(driven(500.0), DetuningSide::kRed));
}

TEST_CASE("fit_g0 recovers the generator") {
  const DeviceParams base;
  for (auto side : {DetuningSide::kBlue, DetuningSide::kRed}) {
    const auto pts = synthetic_linewidths(base, side);
    const auto fit = fit_g0(pts, base.kappa, side);
    CHECK(std::abs(fit.g0 / base.g0 - 1.0) < 1e-10);
    CHECK(std::abs(fit.gamma_i / base.gamma_i - 1.0) < 1e-10);
    CHECK(fit.covariance[0][0] >= 0.0);
    CHECK(fit.covariance[0][0] < 1e-12 * base.g0 * base.g0);
  }
}

TEST_CASE("fit_g0 with 1% linewidth noise") {
  const DeviceParams base;
  const auto clean = synthetic_linewidths(base, DetuningSide::kBlue);
  std::mt19937_64 gen(2026);
  std::normal_distribution<double> noise(0.0, 0.01);
  int within = 0;
  double mean_sd = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    auto pts = clean;
    for (auto& p : pts) p.linewidth *= 1.0 + noise(gen);
    const auto fit = fit_g0(pts, base.kappa);
    if (std::abs(fit.g0 / base.g0 - 1.0) < 0.02) ++within;
    mean_sd += std::sqrt(fit.covariance[0][0]) / 100.0;
  }
  CHECK(within == 100);
  CHECK(mean_sd > 0.0);
  CHECK(mean_sd < 0.02 * base.g0);
}

TEST_CASE("property: fit_g0 under rescaled linewidths") {
  const DeviceParams base;
  const auto pts = synthetic_linewidths(base, DetuningSide::kBlue);
  const auto fit = fit_g0(pts, base.kappa);
  for (double s : {0.5, 3.0, 17.0}) {
    auto scaled = pts;
    for (auto& p : scaled) p.linewidth *= s;
    const auto other = fit_g0(scaled, base.kappa);
    CHECK(other.gamma_i == doctest::Approx(s * fit.gamma_i).epsilon(1e-12));
    CHECK(other.g0 == doctest::Approx(std::sqrt(s) * fit.g0).epsilon(1e-12));
  }
}

TEST_CASE("fit_g0 errors") {
  const DeviceParams base;
  auto pts = synthetic_linewidths(base, DetuningSide::kBlue);
  CHECK_THROWS_AS(fit_g0(std::vector<LinewidthPoint>(pts.begin(), pts.begin() + 2),
                         base.kappa),
                  AdequacyError);
  const std::vector<LinewidthPoint> repeated{{1.0, 2.0}, {1.0, 2.1}, {3.0, 1.9}};
  CHECK_THROWS_AS(fit_g0(repeated, base.kappa), AdequacyError);
  // Narrowing data read as red-side widening implies g0^2 < 0.
  CHECK_THROWS_AS(fit_g0(pts, base.kappa, DetuningSide::kRed), DomainError);
  CHECK_THROWS_AS(fit_g0(pts, 0.0), DomainError);
}

TEST_CASE("photocurrent_variance examples") {
  const auto dev = driven(100.0);
  const double gamma = effective_linewidth(dev, DetuningSide::kBlue);

  SUBCASE("closed form") {
    const FilterParams filt{10.0 * gamma, 50e-9, 2.0, true};
    const double om = gamma_om(dev);
    const double expected =
        8.0 * 4.0 * dev.eta_c() * om / std::pow(11.0 * gamma, 2) * 30.0 * dev.gamma_i *
            (10.0 * (1.0 + std::exp(-gamma * 50e-9)) + 1.0) +
        4.0;
    CHECK(photocurrent_variance(dev, filt, 30.0, true) ==
          doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("long delay approaches the thermal baseline") {
    const FilterParams filt{3.0 * gamma, 1e-3, 1.0, true};
    CHECK(photocurrent_variance(dev, filt, 1578.0, true) ==
          doctest::Approx(photocurrent_variance(dev, filt, 1578.0, false)).epsilon(1e-15));
  }
  SUBCASE("beta >> gamma doubles the fluctuations at zero delay") {
    const FilterParams filt{1e4 * gamma, 0.0, 1.0, false};
    const double ratio = photocurrent_variance(dev, filt, 1578.0, true) /
                         photocurrent_variance(dev, filt, 1578.0, false);
    CHECK(ratio == doctest::Approx((2e4 + 1.0) / (1e4 + 1.0)).epsilon(1e-13));
    CHECK(std::abs(ratio - 2.0) < 1e-4);
  }
  SUBCASE("strictly positive") {
    for (double n_cav : {0.0, 1.0, 400.0}) {
      for (double tau : {0.0, 1e-7, 1e-5}) {
        for (bool shot : {true, false}) {
          const FilterParams filt{hz(1e6), tau, 1.0, shot};
          const double v = photocurrent_variance(driven(n_cav), filt, 10.0, true);
          if (n_cav > 0.0 || shot) CHECK(v > 0.0);
        }
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(photocurrent_variance(dev, {gamma, -1e-9, 1.0, true}, 10.0, true),
                    DomainError);
    CHECK_THROWS_AS(photocurrent_variance(dev, {0.0, 0.0, 1.0, true}, 10.0, true),
                    DomainError);
    CHECK_THROWS_AS(photocurrent_variance(dev, {gamma, 0.0, 1.0, true}, -1.0, true),
                    DomainError);
  }
}

TEST_CASE("property: heralded variance never increases with delay") {
  const auto dev = driven(150.0);
  const double gamma = effective_linewidth(dev, DetuningSide::kBlue);
  for (double beta_ratio : {0.1, 1.0, 10.0}) {
    double prev = INFINITY;
    for (int k = 0; k <= 400; ++k) {
      const FilterParams filt{beta_ratio * gamma, 5e-9 * k, 1.0, true};
      const double v = photocurrent_variance(dev, filt, 1578.0, true);
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("normalized_variance_curve examples") {
  const auto dev = driven(100.0);
  const double gamma = effective_linewidth(dev, DetuningSide::kBlue);
  std::vector<double> taus;
  for (int k = 0; k <= 100; ++k) taus.push_back(1e-6 * k / 100.0);

  const auto noiseless = normalized_variance_curve(dev, 10.0 * gamma, 1578.0, taus, false);
  REQUIRE(noiseless.size() == taus.size());
  CHECK(std::abs(noiseless[0].ratio - 21.0 / 11.0) < 1e-12);
  for (std::size_t k = 1; k < noiseless.size(); ++k) {
    CHECK(noiseless[k].ratio <= noiseless[k - 1].ratio);
    CHECK(noiseless[k].tau == taus[k]);
    CHECK(noiseless[k].ratio == noiseless[k].heralded / noiseless[k].thermal);
  }
  const std::vector<double> far{1.0};
  CHECK(normalized_variance_curve(dev, 10.0 * gamma, 1578.0, far, false)[0].ratio ==
        doctest::Approx(1.0).epsilon(1e-15));

  // A large local oscillator term dilutes the doubling.
  const auto shot = normalized_variance_curve(dev, 10.0 * gamma, 1578.0, taus, true, 1e3);
  CHECK(shot[0].ratio < noiseless[0].ratio);
  CHECK(shot[0].ratio > 1.0);

  CHECK_THROWS_AS(normalized_variance_curve(dev, gamma, 1578.0, std::vector<double>{}),
                  DomainError);
  CHECK_THROWS_AS(normalized_variance_curve(driven(0.0), gamma, 1578.0, taus, false),
                  DomainError);
}

TEST_CASE("decay constant of the ratio curve is the effective linewidth") {
  const auto dev = driven(100.0);
  const double gamma = effective_linewidth(dev, DetuningSide::kBlue);
  std::vector<double> taus;
  for (int k = 0; k <= 60; ++k) taus.push_back(1e-6 * k / 60.0);
  const auto curve = normalized_variance_curve(dev, 10.0 * gamma, 1578.0, taus, false);
  std::vector<double> ratio;
  for (const auto& p : curve) ratio.push_back(p.ratio);
  const auto fit = fit_exponential_decay(taus, ratio);
  CHECK(std::abs(fit.rate / gamma - 1.0) < 1e-6);
  CHECK(fit.offset == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.amplitude == doctest::Approx(10.0 / 11.0).epsilon(1e-9));
  // gamma / 2 pi of about 1.56 MHz puts the 1/e time near 100 ns.
  CHECK(1.0 / fit.rate > 90e-9);
  CHECK(1.0 / fit.rate < 110e-9);

  CHECK_THROWS_AS(fit_exponential_decay(std::vector<double>{0, 1, 2},
                                        std::vector<double>{1, 2, 3}),
                  AdequacyError);
  CHECK_THROWS_AS(fit_exponential_decay(std::vector<double>{1, 1, 1, 1},
                                        std::vector<double>{1, 2, 3, 4}),
                  DomainError);
}

TEST_CASE("fit_exponential_decay round trip") {
  std::vector<double> t, y;
  for (int k = 0; k < 30; ++k) {
    t.push_back(2.0 + 0.1 * k);
    y.push_back(0.3 + 4.0 * std::exp(-1.7 * t.back()));
  }
  const auto fit = fit_exponential_decay(t, y);
  CHECK(fit.rate == doctest::Approx(1.7).epsilon(1e-9));
  CHECK(fit.offset == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(fit.amplitude == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("herald fidelity and expected ratio") {
  CHECK(std::abs(heralding_fidelity(278e3, 5.2e3) - 0.98164) < 1e-5);
  CHECK(heralding_fidelity(278e3, 5.2e3) == doctest::Approx(278.0 / 283.2).epsilon(1e-15));
  CHECK(std::abs(expected_ratio(heralding_fidelity(278e3, 5.2e3)) - 1.98164) < 1e-5);
  CHECK(heralding_fidelity(10.0, 0.0) == 1.0);
  CHECK(expected_ratio(1.0) == 2.0);
  CHECK(heralding_fidelity(0.0, 3.0) == 0.0);
  CHECK(expected_ratio(0.0) == 1.0);
  CHECK_THROWS_AS(heralding_fidelity(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(heralding_fidelity(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(expected_ratio(1.2), DomainError);
}

TEST_CASE("rf_frequency_plan examples") {
  const double wm = hz(3.96e9), dif = hz(20e6), aom = hz(40e6);
  CHECK(rf_frequency_plan(wm, dif, aom, DetuningSide::kBlue) / hz(1.0) ==
        doctest::Approx(3.900e9).epsilon(1e-14));
  CHECK(rf_frequency_plan(wm, dif, aom, DetuningSide::kRed) / hz(1.0) ==
        doctest::Approx(3.980e9).epsilon(1e-14));
  CHECK(rf_frequency_plan(wm, dif, 0.0, DetuningSide::kBlue) ==
        rf_frequency_plan(wm, dif, 0.0, DetuningSide::kRed));
  CHECK_THROWS_AS(rf_frequency_plan(hz(50e6), dif, aom, DetuningSide::kBlue), DomainError);
  CHECK_THROWS_AS(rf_frequency_plan(wm, -1.0, aom, DetuningSide::kBlue), DomainError);
}

TEST_CASE("device defaults") {
  const DeviceParams dev;
  CHECK(dev.eta_c() == doctest::Approx(190.0 / 822.0).epsilon(1e-15));
  CHECK(dev.eta_c() > 0.23);
  CHECK(dev.eta_c() < 0.232);
  CHECK(dev.kappa_i() == doctest::Approx(hz(632e6)).epsilon(1e-15));
  CHECK(hz(1.0) == doctest::Approx(2.0 * M_PI).epsilon(1e-16));
}
