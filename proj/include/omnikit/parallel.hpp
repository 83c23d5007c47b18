#pragma once

#include <functional>

namespace omnikit {

// Worker count: hardware_concurrency capped by the OMNIKIT_THREADS env var.
int thread_budget();

// Runs fn(lo, hi) over disjoint chunks of [0, n). Chunks hold at least
// min_per_item items so tiny workloads stay on the calling thread.
void parallel_ranges(int n, int min_per_item, const std::function<void(int, int)>& fn);

}  // namespace omnikit
