#pragma once

#include <cstdint>
#include <random>

#include "lrsqrt/types.hpp"

namespace lrsqrt {

// Seeded generator with a platform-independent normal transform.
// std::normal_distribution is implementation defined, so draws are made
// with Box-Muller on 53-bit uniforms taken from mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  Matrix gaussian(Index rows, Index cols);
  Vector gaussian(Index n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lrsqrt
