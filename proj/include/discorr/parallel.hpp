#ifndef DISCORR_PARALLEL_HPP
#define DISCORR_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace discorr {

// Worker cap: min(hardware_concurrency, DISCORR_MAX_WORKERS if set).
inline unsigned worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* cap = std::getenv("DISCORR_MAX_WORKERS")) {
    long v = std::strtol(cap, nullptr, 10);
    if (v >= 1 && static_cast<unsigned>(v) < n) n = static_cast<unsigned>(v);
  }
  return n;
}

// Runs fn(i) for i in [0, count). Each index writes only its own output
// slot, so results are independent of scheduling.
inline void parallel_for(int count, const std::function<void(int)>& fn) {
  unsigned workers = worker_count();
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  unsigned n = std::min<unsigned>(workers, static_cast<unsigned>(count));
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count && !failed.load(); i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace discorr

#endif
