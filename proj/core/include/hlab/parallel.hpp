#pragma once

#include <cstddef>
#include <functional>

namespace hlab {

// Process-wide cap on worker threads; 1 means run inline.
void set_worker_count(int workers);
int worker_count();

// Calls body(i) for i in [0, n). Results must be written to slot i by the
// caller so output order never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hlab
