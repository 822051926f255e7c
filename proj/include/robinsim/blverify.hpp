#pragma once

// Numerical checks of the boundary layer of the partially reflecting scheme:
// one application of the scheme's forward propagator, the boundary slope it
// produces, and the erfc-weighted flux integral that recovers kappa.

#include <robinsim/coefficients.hpp>
#include <robinsim/errors.hpp>
#include <robinsim/special_functions.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace robinsim {

/// Density on the uniform grid y_k = k h, k = 0..K.
struct GridDensity {
  double h = 0.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double y(std::size_t k) const { return static_cast<double>(k) * h; }
  double length() const { return values.empty() ? 0.0 : y(values.size() - 1); }

  /// Piecewise-linear interpolant, zero beyond the last node.
  double operator()(double y) const {
    if (values.empty() || y < 0.0 || y > length()) return 0.0;
    const double s = y / h;
    const auto k = std::min(static_cast<std::size_t>(s), values.size() - 2);
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * values[k] + w * values[k + 1];
  }
};

struct PropagatorInput {
  GridDensity density;
  CoefficientModel1D model = CoefficientModel1D::constant(0.0, 1.0);
  double P = 0.0;
  double dt = 1e-4;
  double t = 0.0;

  void validate() const {
    if (density.size() < 3 || !(density.h > 0.0)) throw ConfigError("propagator input needs a grid with spacing > 0");
    if (!(P >= 0.0) || P * std::sqrt(dt) > 1.0) throw ConfigError("P must satisfy 0 <= P sqrt(dt) <= 1");
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const double resolution = std::sqrt(model.diffusion(0.0, t) * dt) / 20.0;
    if (density.h > resolution * (1.0 + 1e-12)) {
      throw ConfigError("grid too coarse for the boundary layer: h = " + std::to_string(density.h) +
                        " exceeds sqrt(sigma dt)/20 = " + std::to_string(resolution));
    }
    for (double v : density.values) {
      if (!(v >= 0.0)) throw ConfigError("propagator input density must be non-negative");
    }
  }
};

/// One step of the forward Kolmogorov equation of the scheme:
///
///   p(y, t+dt) = int_0^inf p(x, t) / sqrt(4 pi sigma dt)
///                { exp(-(y - x - a dt)^2 / 4 sigma dt)
///                  + (1 - P sqrt(dt)) exp(-(y + x + a dt)^2 / 4 sigma dt) } dx
///
/// with a, sigma taken at the source point x. The integral is a trapezoidal
/// sum over the input grid with each kernel cut at 8 standard deviations.
inline GridDensity apply_propagator_1d(const PropagatorInput& in) {
  in.validate();
  const auto& p = in.density;
  const std::size_t n = p.size();
  const double reflect = 1.0 - in.P * std::sqrt(in.dt);
  GridDensity out{p.h, std::vector<double>(n, 0.0)};
  for (std::size_t k = 0; k < n; ++k) {
    const double mass = p.values[k] * (k == 0 || k + 1 == n ? 0.5 * p.h : p.h);
    if (mass == 0.0) continue;
    const double x = p.y(k);
    const double s = in.model.diffusion(x, in.t);
    const double shift = x + in.model.drift(x, in.t) * in.dt;
    const double var4 = 4.0 * s * in.dt;
    const double norm = mass / std::sqrt(std::numbers::pi * var4);
    const double cut = 8.0 * std::sqrt(0.5 * var4);
    const auto span = [&](double centre, double weight) {
      const double lo = std::max(0.0, centre - cut);
      const double hi = std::min(p.length(), centre + cut);
      if (lo > hi) return;
      const auto m0 = static_cast<std::size_t>(std::ceil(lo / p.h));
      const auto m1 = std::min(n - 1, static_cast<std::size_t>(std::floor(hi / p.h)));
      for (std::size_t m = m0; m <= m1; ++m) {
        const double d = p.y(m) - centre;
        out.values[m] += weight * norm * std::exp(-d * d / var4);
      }
    };
    span(shift, 1.0);
    if (reflect > 0.0) span(-shift, reflect);
  }
  return out;
}

/// Trapezoidal mass of a grid density.
inline double grid_mass(const GridDensity& p) {
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p.values[k] * (k == 0 || k + 1 == p.size() ? 0.5 : 1.0);
  return total * p.h;
}

struct BoundaryDerivativeReport {
  double measured_slope = 0.0;   ///< second-order one-sided difference of the output at y = 0
  double predicted_slope = 0.0;  ///< p_in(0) P / sqrt(4 pi sigma0)
  double ratio = 0.0;            ///< measured / predicted; NaN when predicted == 0
  double interior_slope = 0.0;   ///< central difference of the output at y = 10 sqrt(sigma0 dt)
};

inline BoundaryDerivativeReport boundary_derivative_check(const GridDensity& output, const GridDensity& input, double P,
                                                          double sigma0, double dt) {
  if (output.size() < 3 || input.size() < 1) throw ConfigError("boundary check needs at least 3 output nodes");
  if (!(sigma0 > 0.0)) throw DomainError("boundary check requires sigma0 > 0");
  BoundaryDerivativeReport r;
  const auto& o = output.values;
  r.measured_slope = (-3.0 * o[0] + 4.0 * o[1] - o[2]) / (2.0 * output.h);
  r.predicted_slope = input.values[0] * P / std::sqrt(4.0 * std::numbers::pi * sigma0);
  r.ratio = r.predicted_slope != 0.0 ? r.measured_slope / r.predicted_slope : std::numeric_limits<double>::quiet_NaN();
  const double y = 10.0 * std::sqrt(sigma0 * dt);
  const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(y / output.h)), 1, output.size() - 2);
  r.interior_slope = (o[k + 1] - o[k - 1]) / (2.0 * output.h);
  return r;
}

/// P sqrt(sigma0) int_0^5 erfc(z) p(2 z sqrt(sigma0 dt)) dz, the efflux rate of
/// the scheme per unit time. The cut at z = 5 drops less than 2e-13 of the
/// weight int_0^inf erfc = 1/sqrt(pi).
inline double flux_integral(const std::function<double(double)>& density, double P, double sigma0, double dt) {
  if (!(sigma0 > 0.0) || !(dt > 0.0)) throw DomainError("flux integral requires sigma0 > 0 and dt > 0");
  if (P == 0.0) return 0.0;
  const double scale = 2.0 * std::sqrt(sigma0 * dt);
  auto f = [&](double z) { return std::erfc(z) * density(scale * z); };
  double total = 0.0;
  for (int k = 0; k < 5; ++k) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, k, k + 1, 10, 1e-14);
  }
  return P * std::sqrt(sigma0) * total;
}

/// Table version: integrates the piecewise-linear interpolant segment by
/// segment, so kinks at grid nodes do not limit the accuracy.
inline double flux_integral(const GridDensity& density, double P, double sigma0, double dt) {
  if (!(sigma0 > 0.0) || !(dt > 0.0)) throw DomainError("flux integral requires sigma0 > 0 and dt > 0");
  const double scale = 2.0 * std::sqrt(sigma0 * dt);
  if (density.length() < 5.0 * scale * (1.0 - 1e-12)) {
    throw ConfigError("density table must cover [0, 10 sqrt(sigma dt)]");
  }
  if (P == 0.0) return 0.0;
  auto f = [&](double z) { return std::erfc(z) * density(scale * z); };
  const double dz = density.h / scale;
  const auto segments = static_cast<std::size_t>(std::ceil(5.0 / dz - 1e-9));
  double total = 0.0;
  for (std::size_t k = 0; k < segments; ++k) {
    const double a = static_cast<double>(k) * dz;
    const double b = std::min(5.0, a + dz);
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0);
  }
  return P * std::sqrt(sigma0) * total;
}

}  // namespace robinsim
