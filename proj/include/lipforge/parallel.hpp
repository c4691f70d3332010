#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace lipforge {

/// out[i] = fn(i) for i < n on up to `jobs` threads. Results keep index
/// order and the lowest-index exception is rethrown, so the outcome does not
/// depend on `jobs`. fn must not change the global precision setting.
template <class F>
auto ordered_map(std::size_t n, unsigned jobs, F&& fn) -> std::vector<decltype(fn(std::size_t{0}))> {
  using T = decltype(fn(std::size_t{0}));
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace lipforge
