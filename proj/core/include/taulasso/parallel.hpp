#pragma once

#include <cstddef>
#include <functional>

namespace taulasso {

/// Global worker-thread cap. 0 means hardware concurrency. Honors the
/// TAULASSO_THREADS environment variable until overridden.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [0, count). Work items must be independent; results
/// should be written to preallocated slots indexed by i so the outcome does
/// not depend on the number of threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace taulasso
