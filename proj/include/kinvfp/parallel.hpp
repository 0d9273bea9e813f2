#pragma once

#include <cstddef>
#include <span>

namespace kinvfp {

// Worker count used by every parallel loop in the library.
void set_threads(int n);
int threads();

// Resolve the thread count from an explicit value (>0), then KINVFP_THREADS,
// then the hardware concurrency.
int resolve_threads(int requested);

// Sum in a fixed binary-tree order, independent of how the values were produced.
double pairwise_sum(std::span<const double> v);

}  // namespace kinvfp
