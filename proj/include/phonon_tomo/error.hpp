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

#include <stdexcept>
#include <string>

namespace phonon_tomo {

/// Invalid argument or precondition violation (bad parameter ranges,
/// mismatched dimensions, malformed files). The CLI maps it to exit code 2.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Not enough data for a statistically meaningful estimate.
class AdequacyError : public DomainError {
 public:
  explicit AdequacyError(const std::string& what) : DomainError(what) {}
};

/// Numerical breakdown: NaN, negative probabilities, lost completeness,
/// zero predicted probability on an observed bin. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace phonon_tomo
