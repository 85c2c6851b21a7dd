#pragma once

#include <cstddef>
#include <functional>

namespace activscope {

// Worker count: ACTIVSCOPE_THREADS if set and positive, else hardware cores.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Iterations are distributed over worker
// threads; callers must write only to slot i so results do not depend on
// scheduling. The first exception thrown by any iteration is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace activscope
