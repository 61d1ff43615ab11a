#pragma once

#include <cstddef>
#include <functional>

namespace corrsmooth {

//! Calls body(i) for i in [0, n), possibly concurrently. Each index is
//! visited exactly once; callers write results by index so the output does
//! not depend on scheduling.
//!
//! The worker count honours CORRSMOOTH_THREADS when set.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

//! Worker count in effect (after the environment override).
int thread_count();

} // namespace corrsmooth
