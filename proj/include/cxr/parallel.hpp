#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cxr {

/// Number of worker threads used by parallel_for. Honors CXR_THREADS.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) across worker threads.
///
/// Iterations must write to disjoint outputs. Results never depend on the
/// thread count as long as the body itself is a pure function of i.
/// The first exception thrown by any iteration is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cxr
