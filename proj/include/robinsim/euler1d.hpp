#pragma once

// Euler scheme on the half line with partial reflection: a step that lands at
// x' < 0 is terminated with probability P sqrt(dt) and otherwise mirrored to
// -x'. With kappa = P sqrt(sigma(0,t)) / sqrt(pi) the ensemble density
// converges to the Robin problem -J(0,t) = kappa p(0,t) at rate sqrt(dt).

#include <robinsim/coefficients.hpp>
#include <robinsim/errors.hpp>
#include <robinsim/histogram.hpp>
#include <robinsim/parallel.hpp>
#include <robinsim/rng.hpp>
#include <robinsim/special_functions.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace robinsim {

inline constexpr std::uint64_t default_seed = 0x5EED;

/// Absorption parameter P that reproduces reactive constant kappa when the
/// boundary diffusion coefficient is sigma0.
inline double kappa_to_P(double kappa, double sigma0) {
  if (!(sigma0 > 0.0)) throw DomainError("kappa_to_P requires sigma > 0");
  return kappa * sqrt_pi / std::sqrt(sigma0);
}

inline double P_to_kappa(double P, double sigma0) {
  if (!(sigma0 > 0.0)) throw DomainError("P_to_kappa requires sigma > 0");
  return P * std::sqrt(sigma0) * std::numbers::inv_sqrtpi;
}

struct Boundary1D {
  double P = 0.0;
};

struct HistogramSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 200;
};

/// Number of steps N with N * dt == T, or ConfigError if T/dt is not an
/// integer to within rounding.
inline std::uint64_t step_count(double T, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(T > 0.0)) throw ConfigError("horizon T must be positive");
  const double ratio = T / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 4.0 * std::numeric_limits<double>::epsilon() * rounded) {
    throw ConfigError("T/dt = " + std::to_string(ratio) + " is not an integer");
  }
  return static_cast<std::uint64_t>(rounded);
}

struct SimConfig1D {
  CoefficientModel1D model = CoefficientModel1D::constant(0.0, 1.0);
  Boundary1D boundary;
  double x0 = 1.0;
  double T = 1.0;
  double dt = 1e-2;
  std::uint64_t n = 1000;
  std::uint64_t seed = default_seed;
  std::optional<HistogramSpec> histogram;  ///< defaults to default_histogram()
  unsigned workers = 0;                    ///< 0 = hardware concurrency

  /// 200 bins on [0, x0 + |a| T + 6 sqrt(sigma T)], coefficients taken at (x0, 0).
  HistogramSpec default_histogram() const {
    const double a = model.drift(x0, 0.0);
    const double s = model.diffusion(x0, 0.0);
    return {0.0, x0 + std::abs(a) * T + 6.0 * std::sqrt(s * T), 200};
  }

  void validate() const {
    if (!(x0 > 0.0)) throw ConfigError("x0 must be positive");
    if (!(boundary.P >= 0.0)) throw ConfigError("P must be non-negative");
    if (boundary.P * std::sqrt(dt) > 1.0) {
      throw ConfigError("P*sqrt(dt) = " + std::to_string(boundary.P * std::sqrt(dt)) +
                        " exceeds 1; reduce dt");
    }
    if (n == 0) throw ConfigError("trajectory count must be positive");
    step_count(T, dt);
  }
};

/// Ensemble statistics: survivor count and histogram of surviving endpoints.
struct EnsembleResult {
  std::uint64_t n_total = 0;
  std::uint64_t n_survived = 0;
  Histogram1D histogram;
  double dt = 0.0;
  std::uint64_t seed = 0;

  std::uint64_t n_terminated() const { return n_total - n_survived; }
  double survival() const { return static_cast<double>(n_survived) / static_cast<double>(n_total); }

  /// Binomial standard error sqrt(p (1 - p) / n).
  double standard_error() const {
    const double p = survival();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n_total));
  }

  void merge(const EnsembleResult& other) {
    n_total += other.n_total;
    n_survived += other.n_survived;
    histogram.merge(other.histogram);
  }

  bool operator==(const EnsembleResult&) const = default;
};

namespace detail {

/// One partially reflecting step given the already-evaluated drift increment
/// and noise amplitude. x' == 0 counts as inside.
template <class UniformSource>
inline std::optional<double> reflect_or_terminate(double proposal, double termination_probability,
                                                  UniformSource&& uniform) {
  if (proposal >= 0.0) return proposal;
  if (uniform() < termination_probability) return std::nullopt;
  return -proposal;
}

}  // namespace detail

/// One Euler step from x > 0 with standard normal draw z. Returns the next
/// state or nullopt when the trajectory is absorbed. `uniform` is called only
/// when the proposal crosses the boundary.
template <class UniformSource>
std::optional<double> step_1d(double x, double t, double dt, const CoefficientModel1D& model,
                              const Boundary1D& boundary, double z, UniformSource&& uniform) {
  const double proposal =
      x + model.drift(x, t) * dt + std::sqrt(2.0 * model.diffusion(x, t) * dt) * z;
  return detail::reflect_or_terminate(proposal, boundary.P * std::sqrt(dt), uniform);
}

/// Simulate config.n independent trajectories over N = T/dt steps.
///
/// Trajectory i draws from RandomStream(seed, i), so the result is bitwise
/// reproducible for any worker count.
inline EnsembleResult run_ensemble_1d(const SimConfig1D& config) {
  config.validate();
  const std::uint64_t steps = step_count(config.T, config.dt);
  const HistogramSpec spec = config.histogram.value_or(config.default_histogram());

  EnsembleResult proto;
  proto.histogram = Histogram1D(spec.lo, spec.hi, spec.bins);
  proto.dt = config.dt;
  proto.seed = config.seed;

  const double dt = config.dt;
  const double p_term = config.boundary.P * std::sqrt(dt);
  const CoefficientModel1D& model = config.model;

  auto body = [&](EnsembleResult& acc, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(config.seed, i);
      auto uniform = [&rng] { return rng.uniform(); };
      double x = config.x0;
      bool alive = true;
      if (model.constant_coefficients()) {
        const double drift_dt = model.drift(0.0, 0.0) * dt;
        const double amplitude = std::sqrt(2.0 * model.diffusion(0.0, 0.0) * dt);
        for (std::uint64_t k = 0; k < steps; ++k) {
          const auto next = detail::reflect_or_terminate(x + drift_dt + amplitude * rng.normal(), p_term, uniform);
          if (!next) {
            alive = false;
            break;
          }
          x = *next;
        }
      } else {
        for (std::uint64_t k = 0; k < steps; ++k) {
          const double t = static_cast<double>(k) * dt;
          const auto next = step_1d(x, t, dt, model, config.boundary, rng.normal(), uniform);
          if (!next) {
            alive = false;
            break;
          }
          x = *next;
        }
      }
      ++acc.n_total;
      if (alive) {
        ++acc.n_survived;
        acc.histogram.add(x);
      }
    }
  };
  return for_each_chunk(config.n, config.workers, proto, body);
}

/// Sub-probability density of the surviving endpoints: count / (n_total * width).
inline DensityTable empirical_density(const EnsembleResult& result) {
  return density_from_histogram(result.histogram, result.n_total);
}

}  // namespace robinsim
