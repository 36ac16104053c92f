#pragma once

#include <cstddef>
#include <functional>

namespace liebridge {

// Worker count used by parallel_for.  Reads LIEBRIDGE_THREADS once per
// process (0 or unset means hardware concurrency); always at least 1.
unsigned thread_budget();

// Runs fn over [0, n) split into contiguous chunks, one per worker.  Every
// index is owned by exactly one worker, so per-index writes need no
// synchronisation and results are independent of the thread count.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t begin, std::size_t end)>& fn);

}  // namespace liebridge
