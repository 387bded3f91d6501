#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace blindid {

/// Reproducible random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard; every transform on top of it is
/// implemented here so results do not depend on the standard library:
///
///   uniform01   (x >> 11) * 2^-53, in [0, 1)
///   normal      Box-Muller on two uniforms, both outputs used in turn
///   below(n)    rejection sampling on the top bits (unbiased)
///   shuffle     Fisher-Yates from the back using below()
///
/// Trial t of a run seeded with s uses the substream Rng(s ^ t).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng for_trial(std::uint64_t seed, std::uint64_t trial) { return Rng(seed ^ trial); }

  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();
  /// Standard normal conditioned on |x| <= bound (rejection).
  double truncated_normal(double bound);
  std::uint64_t below(std::uint64_t n);
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace blindid
