#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace novelrd {

/// Runs fn(0..n-1) on up to `workers` threads. Every index runs even if
/// others throw; afterwards the exception of the lowest failing index is
/// rethrown.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace novelrd
