#pragma once

#include <cstddef>
#include <functional>

namespace rsplit {

/// Worker count: RSPLIT_THREADS when set to a positive integer, otherwise
/// std::thread::hardware_concurrency() (at least 1).
unsigned worker_count();

/// Runs body(chunk_index) for every chunk in [0, chunks) across
/// worker_count() threads. Chunks are claimed dynamically; callers keep
/// results in per-chunk slots and reduce them in index order, so output
/// never depends on the thread count. The first exception thrown by any
/// chunk is rethrown after all workers join.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

}  // namespace rsplit
