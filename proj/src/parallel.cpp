#include "liebridge/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace liebridge {

unsigned thread_budget() {
  static const unsigned budget = [] {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("LIEBRIDGE_THREADS");
    if (env == nullptr) return hw;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 0) return hw;
    if (v == 0) return hw;
    return std::min(hw, static_cast<unsigned>(v));
  }();
  return budget;
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(thread_budget(), n);
  if (workers <= 1 || n < 64) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace liebridge
