#pragma once

#include "otkit/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace otkit {

// Seeded random helpers. std::*_distribution output is implementation
// defined, so the draws are derived from raw mt19937_64 words directly to
// keep runs reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Uniform point on the simplex (normalized Exp(1) draws).
  Vector simplex(Eigen::Index n) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double u = uniform();
      while (u >= 1.0) u = uniform();
      x[i] = -std::log(1.0 - u);
    }
    return x / x.sum();
  }

  /// Strictly positive simplex point: clamped away from zero, renormalized.
  Vector simplex_positive(Eigen::Index n, double floor = 1e-3) {
    Vector x = simplex(n);
    x = x.array().max(floor);
    return x / x.sum();
  }

  Matrix matrix_uniform(Eigen::Index rows, Eigen::Index cols, double lo,
                        double hi) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(lo, hi);
    return m;
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i)
      std::swap(first[i - 1], first[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace otkit
