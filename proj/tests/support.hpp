#pragma once

// Small helpers shared by the unit tests: seeded generators for property
// tests and a least-squares log-log slope.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gmsde/linalg.hpp"

namespace testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>()(eng_); }

  gmsde::Matrix symmetric(std::size_t d, double scale = 1.0) {
    gmsde::Matrix a(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        a(i, j) = uniform(-scale, scale);
        a(j, i) = a(i, j);
      }
    return a;
  }

  gmsde::Matrix spd(std::size_t d, double shift = 0.1) {
    gmsde::Matrix g(d, d);
    for (double& v : g.data()) v = normal();
    gmsde::Matrix a = g * g.transpose();
    for (std::size_t i = 0; i < d; ++i) a(i, i) += shift;
    return a;
  }

 private:
  std::mt19937_64 eng_;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testing
