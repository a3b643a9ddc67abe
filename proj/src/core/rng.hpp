#pragma once

// Seeded random streams. A 64-bit root seed is split into independent child
// seeds with SplitMix64 so every consumer (patches, slices, gammas, paths)
// draws from its own reproducible stream.

#include <cstdint>
#include <random>

#include "core/numlin.hpp"

namespace trifocal {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed number `index` of `seed`.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  /// Standard complex Gaussian.
  cplx gaussian() {
    const double re = normal();
    const double im = normal();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }
  cplx unit_phase() { return std::polar(1.0, 2.0 * M_PI * uniform()); }
  std::uint64_t next() { return eng_(); }

  CMatrix gaussian_matrix(int rows, int cols) {
    CMatrix m(rows, cols);
    for (auto& z : m.data()) z = gaussian();
    return m;
  }
  template <size_t N>
  std::array<cplx, N> gaussian_array() {
    std::array<cplx, N> a;
    for (auto& z : a) z = gaussian();
    return a;
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace trifocal
