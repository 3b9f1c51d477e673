#pragma once

#include <cstddef>
#include <functional>

namespace exot {

/// Worker count: EXOT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Calls body(i) for every i in [0, count). Iterations must write to
/// disjoint locations; the result is then independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace exot
