#pragma once

#include <cstddef>
#include <functional>

namespace stableflow {

/// Worker cap: STABLEFLOW_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
int worker_count();

/// Runs body(chunk_index) for chunk_index in [0, chunks) across up to
/// worker_count() threads. Chunks are independent; callers reduce results in
/// chunk order so the outcome does not depend on the thread count.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

}  // namespace stableflow
