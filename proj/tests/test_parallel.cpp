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

#include <atomic>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "phonon_tomo/maxlik.hpp"
#include "phonon_tomo/parallel.hpp"
#include "phonon_tomo/povm.hpp"
#include "phonon_tomo/qfit.hpp"
#include "phonon_tomo/sampler.hpp"

using namespace phonon_tomo;

namespace {

struct ThreadGuard {
  explicit ThreadGuard(std::size_t n) { set_thread_count(n); }
  ~ThreadGuard() { set_thread_count(0); }
};

template <class F>
auto with_threads(std::size_t n, F&& f) {
  ThreadGuard guard(n);
  return f();
}

}  // namespace

TEST_CASE("parallel_for covers every index exactly once") {
  for (std::size_t threads : {1, 2, 3, 8}) {
    ThreadGuard guard(threads);
    for (std::size_t n : {0, 1, 2, 7, 1000}) {
      std::vector<std::atomic<int>> hits(n);
      parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) hits[i].fetch_add(1);
      });
      for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
    }
  }
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  ThreadGuard guard(4);
  CHECK_THROWS_AS(parallel_for(100,
                               [](std::size_t lo, std::size_t) {
                                 if (lo > 0) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("nested parallel_for runs inline") {
  ThreadGuard guard(4);
  std::atomic<int> total{0};
  parallel_for(4, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      parallel_for(10, [&](std::size_t a, std::size_t b) { total += int(b - a); });
    }
  });
  CHECK(total.load() == 40);
}

TEST_CASE("thread_count defaults and overrides") {
  set_thread_count(3);
  CHECK(thread_count() == 3);
  set_thread_count(0);
  CHECK(thread_count() >= 1);
}

TEST_CASE("pipeline results do not depend on the worker count") {
  SampleSpec spec;
  spec.n_bar = 30.0;
  spec.n_added = 8.0;
  spec.gain = 0.05;
  spec.count = 60000;
  spec.seed = 77;
  const auto edges = uniform_edges(default_r_max(30.0, 8.0), 40);

  auto run = [&] {
    const auto ds = sample_heralded(HeraldModel{0.9}, spec);
    const auto hist2 = bin_2d(ds, 41);
    QFitOptions qopt;
    qopt.kind = QModelKind::kHeralded;
    qopt.chi = 0.9;
    const auto fit = fit_q(hist2, 30.0, 0.05, 8.0, qopt);
    const auto povm = build_povm(edges, fit.n_added, 400);
    const auto rec = reconstruct(bin_radial(ds, edges, fit.gain), povm);
    PipelineConfig config;
    config.edges = edges;
    config.gain = fit.gain;
    config.maxlik.stop = 1e-4;
    const auto boot = bootstrap_reconstruct(ds, config, povm, 4, 5);
    return std::tuple{ds.samples, hist2.counts, fit.gain, fit.n_added,
                      std::vector<double>(povm.elements().begin(), povm.elements().end()),
                      std::vector<double>(rec.state.probs().begin(), rec.state.probs().end()),
                      boot.mean_nbar, boot.std_nbar};
  };
  const auto serial = with_threads(1, run);
  for (std::size_t threads : {2, 5}) {
    const auto par = with_threads(threads, run);
    CAPTURE(threads);
    CHECK(std::get<0>(par) == std::get<0>(serial));
    CHECK(std::get<1>(par) == std::get<1>(serial));
    CHECK(std::get<2>(par) == std::get<2>(serial));
    CHECK(std::get<3>(par) == std::get<3>(serial));
    CHECK(std::get<4>(par) == std::get<4>(serial));
    CHECK(std::get<5>(par) == std::get<5>(serial));
    CHECK(std::get<6>(par) == std::get<6>(serial));
    CHECK(std::get<7>(par) == std::get<7>(serial));
  }
}
