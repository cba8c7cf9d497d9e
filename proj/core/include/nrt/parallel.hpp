#pragma once

#include <cstddef>
#include <functional>

namespace nrt {

// Number of workers parallel_for uses: the NRT_THREADS environment variable
// when set (>=1), otherwise std::thread::hardware_concurrency().
std::size_t worker_count();

// Runs body(lo, hi) over a fixed contiguous partition of [0, n).
//
// Each index is handled by exactly one worker and every per-index computation
// keeps its own serial accumulation order, so results are bitwise identical
// for any worker count. Reductions must therefore never span indices handled
// by different workers; kernels in this codebase parallelize over output
// planes/rows only.
//
// `grain` is the minimum number of indices per worker; small jobs degrade to
// a plain serial call.
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace nrt
