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

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace phonon_tomo::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kValidation = 2, kNumerical = 3 };

/// Runs one subcommand on a resolved config. Writes its artifact to `out`
/// (stdout for text outputs when unset) and returns the exit code. Failures
/// are reported by exceptions, except non-convergence, which returns
/// kNumerical after the artifact has been written.
int run_command(const std::string& command, const nlohmann::json& config,
                const std::optional<std::filesystem::path>& out);

/// One-line machine-readable error object for stderr.
std::string error_json(const std::string& kind, const std::string& message);

}  // namespace phonon_tomo::cli
