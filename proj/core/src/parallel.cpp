#include "ngcn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

#include "ngcn/errors.hpp"

namespace ngcn {

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  std::vector<std::exception_ptr> failures(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace ngcn
