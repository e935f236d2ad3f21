#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "potwell/field.hpp"

namespace testing {

// Uniform values in [lo, hi), reproducible from the seed.
inline potwell::ScalarField random_field(const potwell::GridSpec& grid, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  potwell::ScalarField u(grid);
  for (double& x : u.values()) x = unif(rng);
  return u;
}

// Smooth random field: a few low sine modes with random amplitudes.
inline potwell::ScalarField smooth_field(const potwell::GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  potwell::ScalarField u(grid);
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b)
      for (int c = 1; c <= 2; ++c) u.axpy(unif(rng) / (a * b * c), potwell::sine_mode(grid, a, b, c));
  return u;
}

inline double max_abs_diff(const potwell::ScalarField& a, const potwell::ScalarField& b) {
  double d = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, std::abs(a[n] - b[n]));
  return d;
}

inline double max_abs(const potwell::ScalarField& a) {
  double d = 0.0;
  for (double x : a.values()) d = std::max(d, std::abs(x));
  return d;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
