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

// phonon-tomo: simulate, fit, reconstruct and model heralded phonon states.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "phonon_tomo/error.hpp"
#include "phonon_tomo/parallel.hpp"

namespace cli = phonon_tomo::cli;

namespace {

struct Subcommand {
  const char* name;
  const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {"simulate", "Draw a quadrature dataset (QDS1 or CSV) and a sidecar JSON"},
    {"fit-q", "Fit gain and added noise to the 2D histogram of a dataset"},
    {"build-povm", "Build the binned radial POVM and write a POV1 cache file"},
    {"reconstruct", "Maximum-likelihood diagonal state from a dataset or histogram"},
    {"bootstrap", "Resample a dataset and reconstruct every trial"},
    {"delay-model", "Heralded / thermal variance versus delay, as CSV"},
    {"freq-plan", "RF drive frequency for the heterodyne down-conversion"},
    {"export-plots", "CSV bundles behind the histogram, linecut, radial and delay plots"},
};

std::optional<std::size_t> env_threads() {
  const char* v = std::getenv("PHONON_TOMO_THREADS");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != std::string(v).size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw phonon_tomo::DomainError("PHONON_TOMO_THREADS must be a non-negative integer");
  }
}

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << cli::error_json(kind, message) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phonon-tomo: heralded phonon state tomography toolkit"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_path, out_path;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::vector<std::string> overrides;
  bool print_config = false;
  auto* config_opt = app.add_option("--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides config 'seed')");
  auto* threads_opt = app.add_option(
      "--threads", threads, "Worker threads; falls back to PHONON_TOMO_THREADS");
  auto* out_opt = app.add_option("--out", out_path, "Output path (stdout when omitted)");
  app.add_option("--set", overrides, "Override a config key: key.path=value")
      ->take_all();
  app.add_flag("--print-config", print_config,
               "Print the resolved config and exit");

  for (const auto& s : kSubcommands) app.add_subcommand(s.name, s.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(cli::kValidation, "usage", e.what());
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (*threads_opt) {
      phonon_tomo::set_thread_count(threads);
    } else if (const auto n = env_threads()) {
      phonon_tomo::set_thread_count(*n);
    }
    const auto config = cli::resolve_config(
        command,
        *config_opt ? std::optional<std::filesystem::path>(config_path) : std::nullopt,
        overrides, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (print_config) {
      std::cout << config.dump(2) << "\n";
      return cli::kOk;
    }
    return cli::run_command(
        command, config,
        *out_opt ? std::optional<std::filesystem::path>(out_path) : std::nullopt);
  } catch (const phonon_tomo::NumericalError& e) {
    return fail(cli::kNumerical, "numerical", e.what());
  } catch (const phonon_tomo::AdequacyError& e) {
    return fail(cli::kValidation, "adequacy", e.what());
  } catch (const phonon_tomo::DomainError& e) {
    return fail(cli::kValidation, "validation", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(cli::kValidation, "validation", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(cli::kValidation, "validation", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(cli::kValidation, "io", e.what());
  } catch (const std::exception& e) {
    return fail(cli::kInternal, "internal", e.what());
  }
}
