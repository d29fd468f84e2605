#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace asiplab {

// All randomness flows through mt19937_64 plus the explicit transforms below.
// std::shuffle and the std distributions are implementation-defined, so they
// are avoided anywhere a seed must reproduce the same stream on every
// platform.
using Rng = std::mt19937_64;

// Worker seed derivation: run seed XOR worker id.
inline std::uint64_t worker_seed(std::uint64_t run_seed, int worker) {
  return run_seed ^ static_cast<std::uint64_t>(worker);
}

// Uniform draw from [0, n) by rejection; unbiased and generator-exact.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform draw from (0, 1] with 53-bit resolution.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

// One Box-Muller pair of independent standard normals.
inline std::pair<double, double> normal_pair(Rng& rng) {
  const double u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

// In-place Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace asiplab
