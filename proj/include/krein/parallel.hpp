#pragma once

#include <cstddef>
#include <functional>

namespace krein {

// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware
// concurrency). Indices are handed out dynamically; callers write results
// into per-index slots so the outcome does not depend on scheduling. The
// first exception thrown by any fn is rethrown after all threads join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

unsigned resolve_workers(unsigned requested);

}  // namespace krein
