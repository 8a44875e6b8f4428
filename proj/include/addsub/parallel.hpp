#pragma once

#include <cstddef>
#include <functional>

namespace addsub {

/// Worker count: ADDSUB_THREADS when set to a positive integer, else the
/// hardware concurrency.
std::size_t worker_count();

/// Runs body(begin, end) over a static partition of [0, n). Work items must
/// be independent; any exception is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace addsub
