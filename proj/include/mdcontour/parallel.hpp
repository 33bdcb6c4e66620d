#pragma once

#include <cstddef>
#include <functional>

namespace mdcontour {

// Worker count: hardware concurrency, capped by MDCONTOUR_THREADS when set.
unsigned worker_count();

// Overrides the worker count for the current process (0 restores the default).
void set_worker_count(unsigned n);

// Runs body(begin, end) over disjoint chunks of [0, n). Blocks until every chunk
// has finished. The body must not touch shared mutable state across chunks.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

} // namespace mdcontour
