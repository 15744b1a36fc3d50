#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "satclass/common.hpp"

namespace satclass {

/// Seedable 64-bit generator with portable derived distributions.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard library distributions are not portable, so every
/// variate here is derived from raw engine output by code in this project.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream keyed by (seed, key). Used for per-class fits.
  static Rng stream(std::uint64_t seed, std::uint64_t key);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  Index uniform_index(Index n);

  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, 1).
  double gamma(double shape);
  double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (Index i = static_cast<Index>(values.size()) - 1; i > 0; --i) {
      const Index j = uniform_index(i + 1);
      std::swap(values[i], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace satclass
