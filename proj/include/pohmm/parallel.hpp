#pragma once

#include <cstddef>
#include <functional>

namespace pohmm {

// Worker count from POHMM_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();

// Runs body(i) for i in [0, n) on up to thread_count() threads. Callers write
// results into pre-sized slots indexed by i, which keeps reductions ordered.
// The exception thrown by the smallest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pohmm
