#pragma once

#include <cstdint>
#include <functional>

namespace cak {

// Runs fn(i) for i in [0, n) across `jobs` threads (0 = hardware default).
// Work is split into fixed chunks by index, so any per-index outputs written
// to preallocated slots are schedule-independent.
void parallel_for(uint64_t n, int jobs, const std::function<void(uint64_t)>& fn);

int default_jobs();

} // namespace cak
