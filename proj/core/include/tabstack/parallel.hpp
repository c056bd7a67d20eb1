#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tabstack {

// Worker count: TABSTACK_THREADS env var wins, then hardware concurrency.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("TABSTACK_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace detail {
inline thread_local bool inside_parallel_region = false;
}

// Runs fn(i) for i in [0, n). Each index must write only its own slots, so
// parallel and serial execution produce identical results. Nested calls run
// serially to avoid thread oversubscription.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned budget = thread_budget();
  if (n == 0) return;
  if (budget <= 1 || n == 1 || detail::inside_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(budget, n));
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      detail::inside_parallel_region = true;
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
      detail::inside_parallel_region = false;
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tabstack
