#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "exp_log_constants.hpp"

// Elementwise reference cores. The AVX2 kernels perform the same operation
// sequence lane-wise (including fused multiply-adds), so per-element outputs
// are bit-identical between backends; these cores also serve the vector
// kernels' remainder lanes.
namespace rmd::kernels::detail {

inline double exp_core(double x0) {
  double x = x0;
  if (x < kExpLow) x = kExpLow;
  if (x > kExpHigh) x = kExpHigh;

  const double px = std::floor(std::fma(kLog2E, x, 0.5));
  const auto n = static_cast<std::int64_t>(px);
  x = std::fma(px, -kExpC1, x);
  x = std::fma(px, -kExpC2, x);
  const double xx = x * x;

  double p = kExpP0;
  p = std::fma(p, xx, kExpP1);
  p = std::fma(p, xx, kExpP2);
  p *= x;
  double q = kExpQ0;
  q = std::fma(q, xx, kExpQ1);
  q = std::fma(q, xx, kExpQ2);
  q = std::fma(q, xx, kExpQ3);
  double e = p / (q - p);
  e = std::fma(2.0, e, 1.0);

  const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(n + 1023) << 52);
  double r = e * scale;
  if (x0 < kExpLow) r = 0.0;  // true value subnormal; flushed
  if (x0 > kExpHigh) r = std::numeric_limits<double>::infinity();
  if (std::isnan(x0)) r = x0;
  return r;
}

inline double log_core(double x0) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x0);
  double e = static_cast<double>(static_cast<std::int64_t>((bits >> 52) & 0x7FF) - 1022);
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | 0x3FE0000000000000ull);
  if (m < kSqrtHalf) {
    e -= 1.0;
    m = m + m - 1.0;
  } else {
    m -= 1.0;
  }
  const double z = m * m;

  double p = kLogP0;
  p = std::fma(p, m, kLogP1);
  p = std::fma(p, m, kLogP2);
  p = std::fma(p, m, kLogP3);
  p = std::fma(p, m, kLogP4);
  p = std::fma(p, m, kLogP5);
  double q = m + kLogQ0;
  q = std::fma(q, m, kLogQ1);
  q = std::fma(q, m, kLogQ2);
  q = std::fma(q, m, kLogQ3);
  q = std::fma(q, m, kLogQ4);

  double y = m * (z * p / q);
  y = std::fma(e, -kLogC2, y);
  y = std::fma(z, -0.5, y);
  double r = m + y;
  r = std::fma(e, kLogC1, r);

  if (x0 < std::numeric_limits<double>::min())  // zero, subnormal, or negative
    r = (x0 >= 0.0) ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::quiet_NaN();
  if (x0 == std::numeric_limits<double>::infinity()) r = x0;
  if (std::isnan(x0)) r = x0;
  return r;
}

inline double gauss_logpdf_core(double y, double mean, double var) {
  const double d = y - mean;
  const double s = kLogTwoPi + log_core(var) + d * d / var;
  return -0.5 * s;
}

}  // namespace rmd::kernels::detail
