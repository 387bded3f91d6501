#include "blindid/rng.hpp"

#include "blindid/error.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace blindid {

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform01();
  } while (u1 == 0.0);
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

double Rng::truncated_normal(double bound) {
  if (!(bound > 0.0)) throw DomainError("truncation bound must be > 0");
  double x = 0.0;
  do {
    x = normal();
  } while (std::abs(x) > bound);
  return x;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw DomainError("below(0) is empty");
  // Largest multiple of n that fits, to avoid modulo bias.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n + 1) % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x > limit);
  return x % n;
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace blindid
