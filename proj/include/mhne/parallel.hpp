#pragma once

#include <cstddef>
#include <functional>

namespace mhne {

/// Worker count: `requested` if positive, else $HE_THREADS if set, else the
/// hardware concurrency. Always >= 1.
int resolve_threads(int requested = 0);

/// Runs `compute(chunk, worker)` for chunk = 0..chunks-1 on up to `threads`
/// workers, and `commit(chunk, worker)` serially in ascending chunk order
/// once that chunk's compute finished. `worker` identifies per-worker
/// scratch. Results that only flow through commit are therefore independent
/// of the thread count. The first exception thrown is rethrown.
void for_each_chunk_ordered(std::size_t chunks, int threads,
                            const std::function<void(std::size_t, int)>& compute,
                            const std::function<void(std::size_t, int)>& commit);

}  // namespace mhne
