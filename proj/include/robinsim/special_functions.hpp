#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace robinsim {

inline constexpr double sqrt_pi = 1.772453850905516027298167483341145;

/// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x).
///
/// For x < 5 the product is formed directly from std::erfc (the exponent
/// stays far from overflow there). For x >= 5 the Laplace continued fraction
///
///   erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
///
/// is evaluated with the modified Lentz algorithm, so erfcx stays finite and
/// accurate up to x ~ 1e150.
inline double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x < 5.0) {
    if (x < -26.5) return std::numeric_limits<double>::infinity();
    return std::exp(x * x) * std::erfc(x);
  }
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::numbers::inv_sqrtpi / f;
}

/// exp(log_prefactor) * erfc(z) without intermediate overflow.
///
/// For z >= 0 this is exp(log_prefactor - z^2) * erfcx(z). Callers that know a
/// closed form for log_prefactor - z^2 should use erfcx directly, since the
/// subtraction here can lose digits when both terms are large.
inline double exp_times_erfc(double log_prefactor, double z) {
  if (z >= 0.0) return std::exp(log_prefactor - z * z) * erfcx(z);
  return std::exp(log_prefactor) * std::erfc(z);
}

}  // namespace robinsim
