#pragma once

#include <cstddef>
#include <functional>

namespace revert {

// Worker count: hardware concurrency, capped by REVERT_FIELD_THREADS when set.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Iterations are split into contiguous blocks,
// one per worker. Callers write only to per-index slots, so results do not
// depend on the worker count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace revert
