#pragma once

#include <cstddef>
#include <functional>

namespace topk {

/// Worker count used when a caller passes 0: hardware concurrency, capped by
/// the TOPKMM_THREADS environment variable or set_thread_limit().
std::size_t default_thread_count();

/// Overrides the environment cap for this process. 0 restores the default.
void set_thread_limit(std::size_t limit);

/// Runs body(i) for every i in [0, n). Work is handed out one index at a
/// time; callers that need reproducible reductions write into slot i and
/// combine afterwards. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

}  // namespace topk
