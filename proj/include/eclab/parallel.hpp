#pragma once

#include <cstddef>
#include <functional>

namespace eclab {

// Worker count: ECLAB_THREADS if set (>= 1), else the hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n). Each index must write only its own output
// slot; callers reduce the slots in index order, so results do not depend on
// the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace eclab
