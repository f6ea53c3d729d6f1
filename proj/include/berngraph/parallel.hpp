#pragma once

#include <cstdint>
#include <functional>

namespace berngraph {

// 0 -> BERNGRAPH_THREADS env if set, else hardware concurrency (min 1).
int resolve_threads(int requested);

// Static contiguous chunking; joins before returning. fn(i) must not touch
// state shared with other indices. threads <= 1 runs inline.
void parallel_for(int64_t n, int threads, const std::function<void(int64_t)>& fn);

} // namespace berngraph
