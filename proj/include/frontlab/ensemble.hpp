#pragma once

#include <cstddef>
#include <functional>

namespace frontlab {

// Worker count: explicit value if > 0, else FRONTLAB_WORKERS, else 1.
int resolve_workers(int requested);

// Runs job(i) for i in [0, n) on up to `workers` threads. Jobs write only to their own slot;
// the first exception (lowest index) is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job);

}  // namespace frontlab
