#pragma once

#include <cstddef>
#include <functional>

namespace mm {

// Global parallelism cap. 0 restores the hardware default.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Runs fn(i) for i in [0, n). Work is chunked across at most max_threads()
// threads; the first worker exception is rethrown after all threads join.
// fn must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mm
