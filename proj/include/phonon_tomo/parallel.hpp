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

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace phonon_tomo {

/// Process-wide worker count used by the data-parallel loops. Defaults to
/// the hardware concurrency; 0 restores the default.
void set_thread_count(std::size_t n);
std::size_t thread_count();

namespace detail {
/// True on threads started by parallel_for; nested loops then run inline.
bool& in_parallel_region();
}  // namespace detail

/// Runs body(begin, end) over a static partition of [0, n) into contiguous
/// chunks, one per worker. Chunk boundaries depend only on n and the worker
/// count, and callers must not let results depend on them. The first
/// exception thrown by any worker is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(n, 1));
  if (workers <= 1 || n < 2 || detail::in_parallel_region()) {
    body(std::size_t{0}, n);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([&, lo, hi] {
      detail::in_parallel_region() = true;
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace phonon_tomo
