#include "ngcn/rng.hpp"

#include <cmath>
#include <numbers>

#include "ngcn/errors.hpp"

namespace ngcn {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ConfigError("Rng::below: bound must be positive");
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(theta);
  has_cached_normal_ = true;
  return radius * std::cos(theta);
}

Rng Rng::fork(std::uint64_t stream) const {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return Rng(z);
}

}  // namespace ngcn
