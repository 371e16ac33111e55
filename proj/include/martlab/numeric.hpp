#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace martlab {

/// Neumaier-compensated accumulator. Summation order is the caller's order,
/// so results are reproducible for a fixed traversal.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Exact integer power m^n as a double (m, n small enough for 2^53).
[[nodiscard]] inline double ipow(int m, int n) noexcept {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= m;
  return r;
}

[[nodiscard]] inline std::size_t ipow_size(int m, int n) noexcept {
  std::size_t r = 1;
  for (int i = 0; i < n; ++i) r *= static_cast<std::size_t>(m);
  return r;
}

[[nodiscard]] inline double euclidean_norm(std::span<const double> x) noexcept {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

/// SplitMix64 step, used to derive independent per-trial seeds from a master seed.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits; unlike
/// std::uniform_real_distribution this is identical across standard libraries.
[[nodiscard]] inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

[[nodiscard]] inline double standard_normal(Rng& rng) noexcept {
  // Box-Muller; the second variate is discarded to keep the stream stateless.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Ordinary least-squares slope of y against x.
[[nodiscard]] inline double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace martlab
