#pragma once

#include <cstdint>
#include <functional>

namespace peelkit {

// Worker count: PEELKIT_THREADS when set to a positive integer, otherwise
// hardware concurrency. Clamped to [1, 256].
int thread_count();

// Calls fn(i) for every i in [begin, end), possibly from multiple threads.
// Each index is handled exactly once; fn must confine its writes to
// index-specific storage and must not throw. Output is identical for any
// thread count as long as that holds.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn);

}  // namespace peelkit
