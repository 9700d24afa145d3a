#pragma once

// Ordered worker pool: task i writes only slot i, so results never depend on
// scheduling. The exception of the lowest failing index is rethrown.

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ibf {

template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(jobs, n);
  std::vector<std::thread> threads;
  threads.reserve(n_threads - 1);
  for (std::size_t k = 1; k < n_threads; ++k) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ibf
