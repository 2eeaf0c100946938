#pragma once

#include <functional>

#include "epsdf/types.hpp"

namespace epsdf {

/// Worker threads to use; reads EPSDF_THREADS once, defaulting to the
/// hardware concurrency.
int thread_count();

inline Index num_chunks(Index n, Index chunk_size) {
  return chunk_size <= 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

/// Workers that for_chunks will launch for this many chunks.
int plan_workers(Index chunks);

/// Runs fn(begin, end, chunk_index, worker_index) over fixed-size chunks of
/// [0, n). Chunks are assigned round-robin (worker w takes chunks w, w+W,
/// ...) and each worker visits its chunks in increasing order, so per-worker
/// accumulations reduced in worker order are reproducible for a fixed worker
/// count. Exceptions from workers are rethrown on the calling thread.
void for_chunks(Index n, Index chunk_size,
                const std::function<void(Index, Index, Index, int)>& fn);

}  // namespace epsdf
