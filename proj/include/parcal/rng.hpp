#pragma once

// Small deterministic generator.  Outputs depend only on the seed, not on the
// standard library's distribution implementations.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "parcal/geometry.hpp"

namespace parcal {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::array<double, kMaxSpatialDim> unit_vector(int n) {
    std::array<double, kMaxSpatialDim> v{};
    double s = 0.0;
    while (s == 0.0) {
      s = 0.0;
      for (int j = 0; j < n; ++j) {
        v[static_cast<std::size_t>(j)] = normal();
        s += v[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
      }
    }
    s = std::sqrt(s);
    for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] /= s;
    return v;
  }

 private:
  std::uint64_t state_;
};

}  // namespace parcal
