#pragma once

#include <cstddef>
#include <functional>

namespace esrate {

//! Worker count: ES_RATE_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

//! Runs body(i) for i in [0, count) on up to worker_count() threads. The first
//! exception by index is rethrown after all workers have joined.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace esrate
