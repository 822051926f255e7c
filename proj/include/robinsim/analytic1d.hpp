#pragma once

// Closed-form transition densities for diffusion on the half line x > 0 with
// constant coefficients and a radiation (Robin) boundary -J(0,t) = kappa p(0,t).

#include <robinsim/errors.hpp>
#include <robinsim/special_functions.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace robinsim {

struct RobinParams1D {
  double sigma = 1.0;
  double a = 0.0;
  double kappa = 0.0;
  double x0 = 1.0;

  void validate() const {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (!(kappa >= 0.0)) throw DomainError("kappa must be non-negative");
    if (!(x0 > 0.0)) throw DomainError("x0 must be positive");
  }
};

namespace detail {

inline void check_time(double t) {
  if (!(t > 0.0)) throw DomainError("density requires t > 0, got t=" + std::to_string(t));
}

}  // namespace detail

/// Reflecting-boundary heat kernel on the half line (two image Gaussians).
inline double image_sum(double x, double t, double sigma, double x0) {
  detail::check_time(t);
  const double four_st = 4.0 * sigma * t;
  return (std::exp(-(x - x0) * (x - x0) / four_st) + std::exp(-(x + x0) * (x + x0) / four_st)) /
         std::sqrt(std::numbers::pi * four_st);
}

/// Zero-drift Robin solution: image sum minus an exponential line of sinks.
/// The exp * erfc product of the sink is rewritten through erfcx, which keeps
/// it finite for large kappa*t and large x.
inline double bryan_density(double x, double t, const RobinParams1D& p) {
  detail::check_time(t);
  p.validate();
  if (p.a != 0.0) throw DomainError("bryan_density requires zero drift");
  const double four_st = 4.0 * p.sigma * t;
  const double s = x + p.x0;
  const double z = (s + 2.0 * p.kappa * t) / std::sqrt(four_st);
  const double images =
      (std::exp(-(x - p.x0) * (x - p.x0) / four_st) + std::exp(-s * s / four_st)) /
      std::sqrt(std::numbers::pi * four_st);
  const double sink = p.kappa / p.sigma * std::exp(-s * s / four_st) * erfcx(z);
  return std::max(0.0, images - sink);
}

/// Robin solution with constant drift a.
///
/// With z = (x + x0 + (2 kappa + a) t) / sqrt(4 sigma t), the sink exponent
/// satisfies (a x + kappa (x + x0 + (kappa + a) t)) / sigma - z^2
///   = a (x - x0) / (2 sigma) - a^2 t / (4 sigma) - (x + x0)^2 / (4 sigma t),
/// which is what gets exponentiated when z >= 0. Rounding can push the
/// difference of images and sink a few ulps below zero; the result is clamped.
inline double drift_density(double x, double t, const RobinParams1D& p) {
  detail::check_time(t);
  p.validate();
  const double sigma = p.sigma;
  const double a = p.a;
  const double kappa = p.kappa;
  const double four_st = 4.0 * sigma * t;
  const double s = x + p.x0;

  const double direct = x - p.x0 - a * t;
  const double mirror = s - a * t;
  const double images = (std::exp(-direct * direct / four_st) +
                         std::exp(-a * p.x0 / sigma - mirror * mirror / four_st)) /
                        std::sqrt(std::numbers::pi * four_st);

  const double c = (2.0 * kappa + a) / (2.0 * sigma);
  const double z = (s + (2.0 * kappa + a) * t) / std::sqrt(four_st);
  double sink;
  if (z >= 0.0) {
    const double e = a * (x - p.x0) / (2.0 * sigma) - a * a * t / (4.0 * sigma) - s * s / four_st;
    sink = c * std::exp(e) * erfcx(z);
  } else {
    sink = c * std::exp((a * x + kappa * (s + (kappa + a) * t)) / sigma) * std::erfc(z);
  }
  return std::max(0.0, images - sink);
}

/// Survival probability p_sur(x0, t) = int_0^inf p(x, t | x0) dx by adaptive
/// Gauss-Kronrod quadrature on [0, max(x0, x0 + a t) + 12 sqrt(sigma t)]. The
/// neglected tail lies beyond 8.4 standard deviations of every Gaussian term.
///
/// Throws NumericError if the quadrature error estimate exceeds abs_tol.
inline double survival_analytic(double t, const RobinParams1D& p, double abs_tol = 1e-7) {
  detail::check_time(t);
  p.validate();
  const double spread = 12.0 * std::sqrt(p.sigma * t);
  const double centre = p.x0 + p.a * t;
  const double upper = std::max(p.x0, centre) + spread;
  auto f = [&](double x) { return drift_density(x, t, p); };

  // Breakpoints around the peak so narrow densities (small t) are not missed.
  double points[4] = {0.0, std::max(0.0, centre - spread), std::max(0.0, centre + spread), upper};
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double total = 0.0;
  double error = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (!(points[k + 1] > points[k])) continue;
    double piece_error = 0.0;
    total += GK::integrate(f, points[k], points[k + 1], 20, 1e-13, &piece_error);
    error += piece_error;
  }
  if (error > abs_tol) {
    throw NumericError("survival quadrature did not converge: error estimate " + std::to_string(error));
  }
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace robinsim
