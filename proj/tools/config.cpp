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

#include "config.hpp"

#include <cstdio>
#include <fstream>

#include "phonon_tomo/error.hpp"

namespace phonon_tomo::cli {

using nlohmann::json;

namespace {

json device_defaults() {
  return {{"kappa_hz", 822e6},  {"kappa_e_hz", 190e6}, {"gamma_i_hz", 2.06e6},
          {"g0_hz", 1.01e6},    {"omega_m_hz", 3.96e9}, {"n_cav", 100.0}};
}

json delay_defaults() {
  return {{"device", device_defaults()},
          {"side", "blue"},
          {"beta_over_gamma", 10.0},
          {"beta_hz", nullptr},
          {"n_bar", 1578.0},
          {"tau_min_s", 0.0},
          {"tau_max_s", 1e-6},
          {"n_tau", 101},
          {"shot_noise", true},
          {"alpha_lo", 1.0}};
}

json maxlik_defaults() {
  return {{"learning_rate", 1e-2}, {"stop", 1e-5}, {"max_iter", 50000}};
}

// Shared by reconstruct and bootstrap.
json tomography_defaults() {
  return {{"dataset", ""},
          {"histogram", ""},
          {"povm", ""},
          {"n_bar", 1578.0},
          {"n_added", 670.0},
          {"gain", nullptr},
          {"n_fock", nullptr},
          {"r_max", nullptr},
          {"n_bins", 200},
          {"nodes_per_bin", 8},
          {"completeness_tol", 1e-6},
          {"maxlik", maxlik_defaults()}};
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    // Integers may not silently become fractional.
    return !(a.is_number_integer() && b.is_number_float());
  }
  return a.type() == b.type();
}

json parse_scalar(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

}  // namespace

json command_defaults(const std::string& command) {
  json d;
  if (command == "simulate") {
    d = {{"state", "thermal"}, {"n_bar", 1578.0}, {"n_added", 670.0},
         {"gain", 8.1e-3},     {"chi", 1.0},      {"count", 100000},
         {"seed", 1},          {"format", "qds1"}};
  } else if (command == "fit-q") {
    d = {{"dataset", ""},    {"n_bar", 1578.0},  {"model", "added"},
         {"chi", 1.0},       {"n_bins", 101},    {"half_range", nullptr},
         {"gain0", 8.1e-3},  {"n_added0", 670.0}, {"max_eval", 2000},
         {"size_tol", 1e-6}, {"min_counts", 10000}};
  } else if (command == "build-povm") {
    d = {{"n_bar", 1578.0},  {"n_added", 670.0},     {"n_fock", nullptr},
         {"r_max", nullptr}, {"n_bins", 200},        {"nodes_per_bin", 8},
         {"completeness_tol", 1e-6}};
  } else if (command == "reconstruct") {
    d = tomography_defaults();
    d["include_state"] = false;
    d["bootstrap_trials"] = 0;
    d["seed"] = 1;
  } else if (command == "bootstrap") {
    d = tomography_defaults();
    d["n_trials"] = 50;
    d["seed"] = 1;
  } else if (command == "delay-model") {
    d = delay_defaults();
  } else if (command == "freq-plan") {
    d = {{"omega_m_hz", 3.96e9}, {"delta_if_hz", 20e6}, {"omega_aom_hz", 40e6},
         {"side", "blue"}};
  } else if (command == "export-plots") {
    d = {{"bundles", json::array({"histogram2d", "linecut", "radial", "delay"})},
         {"dataset", ""},
         {"n_bins_2d", 101},
         {"half_range", nullptr},
         {"fit", {{"file", ""},
                  {"model", "added"},
                  {"chi", 1.0},
                  {"n_bar", 1578.0},
                  {"gain", 8.1e-3},
                  {"n_added", 670.0}}},
         {"radial_bins", 80},
         {"r_max", nullptr},
         {"report", ""},
         {"delay", delay_defaults()}};
  } else {
    throw DomainError("unknown command '" + command + "'");
  }
  d["format_version"] = kFormatVersion;
  return d;
}

void merge_strict(json& defaults, const json& user, const std::string& where) {
  if (!user.is_object()) {
    throw DomainError("config" + (where.empty() ? "" : " key '" + where + "'") +
                      " must be a JSON object");
  }
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!defaults.contains(key)) throw DomainError("unknown config key '" + path + "'");
    json& slot = defaults[key];
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else if (slot.is_null()) {
      if (!value.is_null() && !value.is_number()) {
        throw DomainError("config key '" + path + "' must be a number or null");
      }
      slot = value;
    } else {
      if (!same_kind(slot, value)) {
        throw DomainError("config key '" + path + "' expects " +
                          std::string(slot.type_name()) + ", got " + value.type_name());
      }
      if (slot.is_array()) {
        for (const auto& item : value) {
          if (!item.is_string()) {
            throw DomainError("config key '" + path + "' must list strings");
          }
        }
      }
      slot = value;
    }
  }
  if (where.empty() && defaults.at("format_version") != kFormatVersion) {
    throw DomainError("unsupported format_version " +
                      defaults.at("format_version").dump() + ", expected " +
                      std::to_string(kFormatVersion));
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw DomainError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  json value = parse_scalar(assignment.substr(eq + 1));
  // Build {"a": {"b": value}} and merge it through the strict path.
  json patch = value;
  std::size_t end = key.size();
  for (;;) {
    const auto dot = key.rfind('.', end - 1);
    const std::size_t begin = dot == std::string::npos ? 0 : dot + 1;
    patch = json{{key.substr(begin, end - begin), patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge_strict(config, patch);
}

json resolve_config(const std::string& command,
                    const std::optional<std::filesystem::path>& file,
                    const std::vector<std::string>& overrides,
                    std::optional<std::uint64_t> seed) {
  json config = command_defaults(command);
  if (file) {
    std::ifstream is(*file);
    if (!is) throw DomainError("cannot open config " + file->string());
    json user;
    try {
      user = json::parse(is);
    } catch (const json::parse_error& e) {
      throw DomainError("config " + file->string() + ": " + e.what());
    }
    merge_strict(config, user);
  }
  for (const auto& o : overrides) apply_override(config, o);
  if (seed) {
    if (!config.contains("seed")) {
      throw DomainError("--seed does not apply to '" + command + "'");
    }
    config["seed"] = *seed;
  }
  return config;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace phonon_tomo::cli
