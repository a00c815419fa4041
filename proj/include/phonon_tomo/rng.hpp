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

#include <cmath>
#include <cstdint>
#include <numbers>

namespace phonon_tomo {

/// Counter-based random stream: every draw is a pure function of
/// (key, counter, slot), so samples can be generated in any order or on any
/// number of threads with bit-identical results.
///
/// The mixing function is the SplitMix64 finalizer applied to a Weyl
/// sequence over the combined counter.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(mix(key ^ 0x6a09e667f3bcc909ULL)) {}

  /// Raw 64 random bits for (counter, slot).
  std::uint64_t bits(std::uint64_t counter, std::uint32_t slot) const {
    const std::uint64_t c = mix(counter * 0x9e3779b97f4a7c15ULL + key_);
    return mix(c ^ (std::uint64_t(slot) * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
  }

  /// Uniform in the open interval (0, 1); 53 bits of resolution.
  double uniform(std::uint64_t counter, std::uint32_t slot) const {
    return (double(bits(counter, slot) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential with unit mean.
  double exponential(std::uint64_t counter, std::uint32_t slot) const {
    return -std::log(uniform(counter, slot));
  }

  /// Uniform integer in [0, n) via the multiply-shift reduction.
  std::uint64_t below(std::uint64_t n, std::uint64_t counter,
                      std::uint32_t slot) const {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(bits(counter, slot)) * n) >> 64);
  }

  /// Pair of independent standard normals (Box-Muller) from two slots.
  void normal_pair(std::uint64_t counter, std::uint32_t slot, double& z0,
                   double& z1) const {
    const double radius = std::sqrt(-2.0 * std::log(uniform(counter, slot)));
    const double phase = 2.0 * std::numbers::pi * uniform(counter, slot + 1);
    z0 = radius * std::cos(phase);
    z1 = radius * std::sin(phase);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

}  // namespace phonon_tomo
