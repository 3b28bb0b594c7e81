#pragma once

#include <cstddef>
#include <functional>

namespace tminimax {

// Worker threads to use: hardware concurrency, capped by TMINIMAX_THREADS
// when that variable holds a positive integer.
unsigned worker_count();

// Runs body(i) for i in [0, n) across worker_count() threads in contiguous
// blocks. Callers write results into per-index slots and reduce in index order
// afterwards, which keeps outputs independent of the thread count. The first
// exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace tminimax
