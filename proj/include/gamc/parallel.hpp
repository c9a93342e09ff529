#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gamc {

// Number of worker threads used by parallel_for. 0 selects hardware concurrency.
inline std::size_t& parallel_threads() {
  static std::size_t n = 0;
  return n;
}

// Runs fn(i) for i in [0, n) over contiguous chunks. Each index is visited by exactly
// one thread, so callers that write only to slot i get results independent of thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::size_t workers = parallel_threads();
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace gamc
