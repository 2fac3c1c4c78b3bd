// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_PARALLEL_HPP
#define RATCHET_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ratchet {

// Static index partition across threads. Each index must write only its own
// output slots; reductions happen afterwards in index order, so results are
// bitwise identical for any thread count. n_threads <= 0 picks the hardware
// concurrency.
inline void parallel_for(std::size_t n, int n_threads,
                         const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  std::size_t workers = n_threads > 0
                            ? static_cast<std::size_t>(n_threads)
                            : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ratchet

#endif
