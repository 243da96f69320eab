// Copyright 2026 The qtomo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace qtomo {

/// Runs fn(i) for i in [0, count). Results must be written to preallocated
/// per-index slots by the caller; the work distribution is an atomic ticket
/// so any worker count produces the same per-index outputs.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> ticket{0};
  std::exception_ptr first_error = nullptr;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (;;) {
      const std::size_t i = ticket.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  pool.reserve(n_threads);
  for (std::size_t w = 0; w < n_threads; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (failed.load() && first_error) std::rethrow_exception(first_error);
}

}  // namespace qtomo
