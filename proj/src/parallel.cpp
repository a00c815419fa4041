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

#include "phonon_tomo/parallel.hpp"

#include <atomic>

namespace phonon_tomo {

namespace {
std::atomic<std::size_t> g_threads{0};
}

bool& detail::in_parallel_region() {
  thread_local bool flag = false;
  return flag;
}

void set_thread_count(std::size_t n) { g_threads.store(n); }

std::size_t thread_count() {
  const std::size_t n = g_threads.load();
  if (n != 0) return n;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace phonon_tomo
