#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mlmpc {

// Runs body(i) for i in [0, n) across up to `jobs` threads (0 = hardware
// concurrency). Callers keep determinism by writing results only to slot i;
// scheduling order is then irrelevant. The first exception thrown by any
// body is rethrown on the calling thread after all workers join.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         unsigned jobs = 0) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  unsigned workers = jobs == 0 ? (hw == 0 ? 1 : hw) : jobs;
  if (workers > n) workers = static_cast<unsigned>(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mlmpc
