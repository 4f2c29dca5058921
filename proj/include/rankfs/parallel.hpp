#pragma once

#include <cstddef>
#include <functional>

namespace rankfs {

// Process-wide default worker count used when callers pass 0. Defaults to 1.
void set_default_workers(std::size_t workers);
std::size_t default_workers();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be written
// to index-addressed slots so output never depends on the schedule. Calls made
// from inside a worker run serially. The exception thrown by the lowest failing
// index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = 0);

} // namespace rankfs
