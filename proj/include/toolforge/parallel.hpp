#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <stdexcept>
#include <thread>
#include <vector>

namespace toolforge {

/// Calls fn(i) for i in [0, count) on up to `jobs` threads. Items must not
/// share mutable state. The exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(int count, int jobs, F&& fn) {
  if (jobs <= 0) throw std::invalid_argument("jobs must be >= 1");
  std::vector<std::exception_ptr> errors(std::max(count, 0));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min(jobs, std::max(count, 1));
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace toolforge
