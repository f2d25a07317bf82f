#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "lapmax/linalg.hpp"

namespace lapmax {

/// Seeded generator with hand-rolled transforms so that results are
/// bit-identical across standard libraries (std::normal_distribution
/// is implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec normal_vec(int n) {
    Vec v(n);
    for (double& x : v) x = normal();
    return v;
  }

  /// Uniform direction on the unit sphere intersected with {Σx = 0}.
  /// For n < 2 that intersection is empty; returns the zero vector.
  Vec zero_sum_direction(int n) {
    if (n < 2) return Vec(n, 0.0);
    for (;;) {
      Vec v = normal_vec(n);
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= n;
      for (double& x : v) x -= mean;
      double nn = norm(v);
      if (nn < 1e-12) continue;
      for (double& x : v) x /= nn;
      return v;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lapmax
