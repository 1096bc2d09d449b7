#pragma once

#include <exception>
#include <thread>
#include <vector>

namespace lpvce {

// Runs fn(i) for i in [0, n) across at most `threads` workers with a fixed
// strided partition, so results written per index are deterministic
// regardless of the worker count. Rethrows the first exception.
template <typename F>
void parallel_for(int n, int threads, F&& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += workers) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace lpvce
