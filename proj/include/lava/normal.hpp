#pragma once

#include <cmath>

namespace lava {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

/// Standard normal density.
inline double std_normal_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

/// Phi(x), via erfc for full-tail accuracy.
inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / kSqrt2);
}

/// 1 - Phi(x).
inline double std_normal_tail(double x) {
  return 0.5 * std::erfc(x / kSqrt2);
}

/// Density of N(theta, sigma^2) at z. z may be +-inf (returns 0).
inline double normal_pdf(double z, double theta, double sigma) {
  if (std::isinf(z)) return 0.0;
  return std_normal_pdf((z - theta) / sigma) / sigma;
}

/// Pr(Z > z) for Z ~ N(theta, sigma^2).
inline double normal_tail(double z, double theta, double sigma) {
  if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
  return std_normal_tail((z - theta) / sigma);
}

/// Phi^{-1}(p): rational initial guess refined by Newton steps on erfc.
double std_normal_quantile(double p);

}  // namespace lava
