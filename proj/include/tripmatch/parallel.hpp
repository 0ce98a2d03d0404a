#ifndef TRIPMATCH_PARALLEL_HPP_
#define TRIPMATCH_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tripmatch {

inline constexpr const char* kThreadsEnvironmentVariable = "TRIPMATCH_THREADS";

// Worker count from TRIPMATCH_THREADS; 1 when unset or unparsable.
inline unsigned configured_threads() {
  const char* raw = std::getenv(kThreadsEnvironmentVariable);
  if (raw == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || v < 1) return 1;
  return static_cast<unsigned>(std::min(v, 256L));
}

// Calls fn(i) for i in [0, n), split into contiguous blocks across the
// configured workers. fn must only write state owned by index i, so the
// result does not depend on the worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(configured_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_lock;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(n, lo + block);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> hold(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tripmatch

#endif  // TRIPMATCH_PARALLEL_HPP_
