#pragma once

#include <cstddef>
#include <functional>

namespace probsub {

/// Worker count from PROBSUB_THREADS (unset or 0 = hardware concurrency).
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on up to worker_count() threads. A failure
/// stops further dispatch; the first exception is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace probsub
