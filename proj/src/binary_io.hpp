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

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "phonon_tomo/error.hpp"

// Little-endian scalar I/O shared by the dataset and POVM file formats.
namespace phonon_tomo::detail {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8 || sizeof(T) == 1);
  if constexpr (sizeof(T) == 1) {
    os.put(static_cast<char>(value));
  } else {
    const auto bits = std::bit_cast<std::uint64_t>(value);
    std::array<char, 8> bytes;
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
    os.write(bytes.data(), 8);
  }
}

template <class T>
T get_le(std::istream& is) {
  static_assert(sizeof(T) == 8 || sizeof(T) == 1);
  if constexpr (sizeof(T) == 1) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw DomainError("file truncated");
    return static_cast<T>(c);
  } else {
    std::array<unsigned char, 8> bytes;
    is.read(reinterpret_cast<char*>(bytes.data()), 8);
    if (!is) throw DomainError("file truncated");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t(bytes[k]) << (8 * k);
    return std::bit_cast<T>(bits);
  }
}

}  // namespace phonon_tomo::detail
