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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("phonon_tomo_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI with stdout and stderr captured to files; returns the exit code.
int run(const std::string& args, const std::string& tag = "last") {
  const auto out = scratch() / (tag + ".stdout");
  const auto err = scratch() / (tag + ".stderr");
  const std::string cmd = std::string(PHONON_TOMO_CLI) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

std::string stdout_of(const std::string& tag = "last") {
  return slurp(scratch() / (tag + ".stdout"));
}

json stderr_json(const std::string& tag = "last") {
  return json::parse(slurp(scratch() / (tag + ".stderr")));
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

const std::string kThermal =
    " --set state=thermal --set n_bar=4.0 --set n_added=0.5 --set gain=1.0 ";

}  // namespace

TEST_CASE("simulate is byte-identical for the same seed") {
  REQUIRE(run("simulate" + kThermal + "--set count=5000 --seed 9 --out " + path("a.qds")) == 0);
  REQUIRE(run("simulate" + kThermal + "--set count=5000 --seed 9 --out " + path("b.qds")) == 0);
  REQUIRE(run("simulate" + kThermal + "--set count=5000 --seed 10 --out " + path("c.qds")) ==
          0);
  CHECK(slurp(path("a.qds")) == slurp(path("b.qds")));
  CHECK(slurp(path("a.qds")) != slurp(path("c.qds")));
  const auto side = json::parse(slurp(path("a.qds") + ".json"));
  CHECK(side.at("samples") == 5000);
  CHECK(side.at("config").at("seed") == 9);
  CHECK(side.at("config_hash").get<std::string>().size() == 16);
  CHECK(side.at("config_hash") ==
        json::parse(slurp(path("b.qds") + ".json")).at("config_hash"));
}

TEST_CASE("validation failures exit 2 with a JSON error") {
  CHECK(run("simulate --set count=0 --out " + path("x.qds")) == 2);
  CHECK(stderr_json().at("error").at("kind") == "validation");

  CHECK(run("simulate --set bogus=1 --out " + path("x.qds")) == 2);
  CHECK(stderr_json().at("error").at("message").get<std::string>().find("bogus") !=
        std::string::npos);

  std::ofstream(path("bad.json")) << R"({"n_bar": 4.0, "maxlik": {"nope": 1}})";
  CHECK(run("reconstruct --config " + path("bad.json")) == 2);
  CHECK(run("simulate --set count=1.5 --out " + path("x.qds")) == 2);
  std::ofstream(path("v2.json")) << R"({"format_version": 2})";
  CHECK(run("freq-plan --config " + path("v2.json")) == 2);
  CHECK(run("freq-plan --seed 3") == 2);
  CHECK(run("reconstruct --set dataset=" + path("missing.qds")) == 2);
  CHECK(run("no-such-command") == 2);
}

TEST_CASE("non-converged reconstruction exits 3 after writing its report") {
  REQUIRE(run("simulate" + kThermal + "--set count=20000 --out " + path("th.qds")) == 0);
  const std::string rec = "reconstruct --set dataset=" + path("th.qds") +
                          " --set n_bar=4.0 --set n_added=0.5 --set n_bins=40";
  CHECK(run(rec + " --set maxlik.max_iter=2 --out " + path("nc.json")) == 3);
  CHECK(stderr_json().at("error").at("kind") == "numerical");
  const auto report = json::parse(slurp(path("nc.json")));
  CHECK(report.at("converged") == false);
  CHECK(report.at("iterations") == 2);
}

TEST_CASE("delay-model writes a monotone ratio column") {
  REQUIRE(run("delay-model --set n_tau=41 --set shot_noise=false") == 0);
  std::istringstream is(stdout_of());
  std::string line;
  std::getline(is, line);
  CHECK(line.rfind("# config_hash=", 0) == 0);
  std::getline(is, line);
  CHECK(line == "tau_s,variance_heralded,variance_thermal,ratio");
  std::vector<double> ratio;
  while (std::getline(is, line)) ratio.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  REQUIRE(ratio.size() == 41);
  CHECK(ratio.front() == doctest::Approx(21.0 / 11.0).epsilon(1e-12));
  for (std::size_t k = 1; k < ratio.size(); ++k) CHECK(ratio[k] <= ratio[k - 1]);
}

TEST_CASE("freq-plan") {
  REQUIRE(run("freq-plan") == 0);
  CHECK(json::parse(stdout_of()).at("f_rf_hz").get<double>() ==
        doctest::Approx(3.900e9).epsilon(1e-12));
  REQUIRE(run("freq-plan --set side=red") == 0);
  CHECK(json::parse(stdout_of()).at("f_rf_hz").get<double>() ==
        doctest::Approx(3.980e9).epsilon(1e-12));
}

TEST_CASE("thermal pipeline end to end") {
  REQUIRE(run("simulate" + kThermal + "--set count=400000 --seed 5 --set format=csv --out " +
              path("big.csv")) == 0);
  REQUIRE(run("build-povm --set n_bar=4.0 --set n_added=0.5 --set n_bins=60 --out " +
              path("p.pov")) == 0);
  CHECK(json::parse(slurp(path("p.pov") + ".json")).at("completeness_error") < 1e-6);

  std::ofstream(path("rec.json")) << json{{"dataset", path("big.csv")},
                                           {"povm", path("p.pov")},
                                           {"n_bar", 4.0},
                                           {"n_added", 0.5},
                                           {"gain", 1.0},
                                           {"n_bins", 60},
                                           {"include_state", true},
                                           {"maxlik", {{"stop", 1e-6}}}}
                                          .dump();
  REQUIRE(run("reconstruct --threads 2 --config " + path("rec.json") + " --out " +
              path("report.json")) == 0);
  const auto report = json::parse(slurp(path("report.json")));
  CHECK(report.at("converged") == true);
  CHECK(std::abs(report.at("nbar").get<double>() / 4.0 - 1.0) < 0.01);
  CHECK(report.at("pvac").get<double>() == doctest::Approx(0.2).epsilon(0.03));
  CHECK(report.at("probs").size() > 10);

  // Same result on one thread and through the environment fallback.
  REQUIRE(run("reconstruct --threads 1 --config " + path("rec.json") + " --out " +
              path("report1.json")) == 0);
  CHECK(slurp(path("report.json")) == slurp(path("report1.json")));

  REQUIRE(run("export-plots --set dataset=" + path("big.csv") +
              " --set fit.model=thermal --set fit.n_bar=4.0 --set fit.gain=1.0"
              " --set fit.n_added=0.5 --set n_bins_2d=31 --set report=" +
              path("report.json") +
              R"( --set 'bundles=["histogram2d","linecut","radial","state"]' --out )" +
              path("plots")) == 0);
  const auto manifest = json::parse(slurp(path("plots") + "/manifest.json"));
  CHECK(manifest.at("files").size() == 4);
  for (const auto& f : manifest.at("files")) {
    CHECK(fs::file_size(path("plots") + "/" + f.get<std::string>()) > 0);
  }
}

TEST_CASE("bootstrap summary") {
  REQUIRE(run("simulate" + kThermal + "--set count=20000 --seed 6 --out " + path("bs.qds")) ==
          0);
  const std::string cmd = "bootstrap --set dataset=" + path("bs.qds") +
                          " --set n_bar=4.0 --set n_added=0.5 --set n_bins=40"
                          " --set n_trials=4 --set maxlik.stop=1e-6 --seed 3";
  REQUIRE(run(cmd) == 0);
  const auto a = json::parse(stdout_of());
  CHECK(a.at("n_trials") == 4);
  CHECK(a.at("per_trial").size() == 4);
  CHECK(a.at("std_nbar").get<double>() > 0.0);
  REQUIRE(run(cmd + " --threads 3") == 0);
  CHECK(json::parse(stdout_of()) == a);
}
