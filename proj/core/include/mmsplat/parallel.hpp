#pragma once

#include <cstddef>
#include <functional>

namespace mmsplat {

// Worker count resolution: explicit request > MMSPLAT_WORKERS env var >
// hardware concurrency. Always at least 1.
int resolve_workers(int requested);

// Runs fn(i) for i in [0, n). Work items are claimed dynamically, so callers
// must make items independent; determinism comes from writing to disjoint
// or per-item output slots, never from scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace mmsplat
