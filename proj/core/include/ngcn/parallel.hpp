#pragma once

#include <cstddef>
#include <functional>

namespace ngcn {

/// Calls fn(i) for i in [0, count) on up to `jobs` threads. Work is handed out
/// by index, so callers that write results to slot i get output independent of
/// the thread count. If any call throws, the exception of the lowest failing
/// index is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ngcn
