#pragma once

#include <cstddef>
#include <functional>

namespace latgibbs {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Tasks must be
/// independent; results are written by index so the outcome never depends on
/// scheduling. threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace latgibbs
