#pragma once
// Small deterministic parallel-for helper.  Worker count comes from the
// TOOL_THREADS environment variable (falling back to the hardware count);
// results must be written into caller-preallocated slots indexed by the
// loop variable so the outcome is independent of scheduling.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace indef {

inline int tool_threads() {
  if (const char* env = std::getenv("TOOL_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return int(std::min(v, 64L));
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

namespace detail {

template <class Fn>
void parallel_for(int count, Fn&& fn, int threads = 0) {
  if (count <= 0) return;
  int workers = threads > 0 ? threads : tool_threads();
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mtx;
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mtx);
          if (!first_error) first_error = std::current_exception();
          next.store(count, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail
}  // namespace indef
