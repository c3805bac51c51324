#pragma once

#include <cstddef>
#include <functional>

namespace homoglab {

/// Worker cap from HOMOGLAB_THREADS (0 or unset: hardware concurrency).
unsigned worker_count();

/// Runs job(k) for k in [0, n) on up to `workers` threads. Jobs must write
/// only to their own slot k; the first exception thrown is rethrown after
/// all workers join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& job);

}  // namespace homoglab
