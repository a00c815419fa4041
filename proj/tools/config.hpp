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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace phonon_tomo::cli {

inline constexpr int kFormatVersion = 1;

/// Default configuration of a command; also its schema. Keys with a null
/// default accept a number or null.
nlohmann::json command_defaults(const std::string& command);

/// Merges `user` into `defaults` strictly: unknown keys, type mismatches
/// and a wrong format_version throw DomainError. `where` prefixes messages.
void merge_strict(nlohmann::json& defaults, const nlohmann::json& user,
                  const std::string& where = "");

/// Applies "a.b.c=value" overrides; value is parsed as JSON, falling back
/// to a plain string.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Defaults, then the config file, then overrides, then --seed.
nlohmann::json resolve_config(const std::string& command,
                              const std::optional<std::filesystem::path>& file,
                              const std::vector<std::string>& overrides,
                              std::optional<std::uint64_t> seed);

/// FNV-1a 64 of the compact dump (keys sorted), as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace phonon_tomo::cli
