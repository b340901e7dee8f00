#pragma once

#include <cstddef>
#include <functional>

namespace gridcoher {

/// Worker cap from GRIDCOHER_THREADS, else the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(0..count-1) on up to worker_count() threads. Each index writes only
/// its own output slot, so results do not depend on the thread count. If any
/// call throws, the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace gridcoher
