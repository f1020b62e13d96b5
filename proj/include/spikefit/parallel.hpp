#pragma once

#include <cstddef>
#include <functional>

namespace spikefit {

// Runs body(i) for i in [0, n) on up to `jobs` threads (0 = hardware
// concurrency). Work items must be independent; callers write results into
// slots indexed by i, so output order never depends on scheduling. If any
// item throws, the exception from the lowest index is rethrown after all
// threads finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace spikefit
