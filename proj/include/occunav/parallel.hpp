#pragma once

#include <cstddef>
#include <functional>

namespace occunav {

/// Worker cap: OCCUNAV_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
std::size_t max_threads();

/// Runs fn(i) for i in [0, n). Each index must write only its own output
/// slot; the first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace occunav
