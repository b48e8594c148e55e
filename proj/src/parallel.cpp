#include "topkgmm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace topk {

namespace {

std::atomic<std::size_t> g_limit{0};

std::size_t env_limit() {
  const char* raw = std::getenv("TOPKMM_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  try {
    const long value = std::stol(raw);
    return value > 0 ? static_cast<std::size_t>(value) : 0;
  } catch (...) {
    return 0;
  }
}

}  // namespace

std::size_t default_thread_count() {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t forced = g_limit.load();
  if (forced != 0) return forced;
  const std::size_t cap = env_limit();
  if (cap != 0) n = std::min(n, cap);
  return n;
}

void set_thread_limit(std::size_t limit) { g_limit.store(limit); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads) {
  if (threads == 0) threads = default_thread_count();
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace topk
