#pragma once

#include <cstddef>
#include <functional>

namespace snowball {

// Worker cap from SNOWBALL_SIM_THREADS (unset or 0 means hardware concurrency).
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Each index is handled exactly once; callers write
// into pre-sized per-index slots so results do not depend on scheduling.
// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace snowball
