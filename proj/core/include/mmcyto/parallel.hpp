#pragma once

#include <cstddef>
#include <functional>

namespace mmcyto {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (threads <= 1 runs
/// inline). Work is handed out by an atomic counter; callers write results
/// into per-index slots so output never depends on scheduling. The first
/// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace mmcyto
