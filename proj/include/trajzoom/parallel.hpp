#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace trajzoom {

/// Calls task(i) for i in [0, n) on up to `threads` workers. Tasks must only
/// write to state owned by index i; callers reduce afterwards in index order,
/// which keeps results independent of the thread count. The first exception
/// thrown by any task is rethrown here.
template <class Task>
void parallel_for(std::size_t n, unsigned threads, Task&& task) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(threads, n);
  pool.reserve(count);
  for (std::size_t w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace trajzoom
