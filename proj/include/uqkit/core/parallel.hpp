#ifndef UQKIT_CORE_PARALLEL_HPP_
#define UQKIT_CORE_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace uqkit {

namespace detail {
inline std::atomic<std::size_t> &max_threads_setting() {
  static std::atomic<std::size_t> value{0};
  return value;
}
}  // namespace detail

// 0 means "use std::thread::hardware_concurrency()".
inline void set_max_threads(std::size_t n) { detail::max_threads_setting() = n; }

inline std::size_t max_threads() {
  const std::size_t configured = detail::max_threads_setting();
  if (configured > 0) return configured;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/*
 * Runs fn(i) for i in [0, count). Tasks write their results into slots
 * indexed by i, so the outcome never depends on scheduling. The first
 * exception thrown by any task is rethrown on the calling thread.
 */
template <typename Fn>
void parallel_for(std::size_t count, Fn &&fn) {
  const std::size_t workers = std::min(max_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) threads.emplace_back(worker);
  worker();
  for (auto &t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace uqkit

#endif  // UQKIT_CORE_PARALLEL_HPP_
