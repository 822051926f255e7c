#pragma once

// Euler scheme in the half space x_1 > 0 with partial oblique reflection.
//
// A proposal x' with x'_1 < 0 is terminated with probability P(x'_B) sqrt(dt),
// where x'_B is its normal projection onto the boundary, and is otherwise
// moved along the unit vector v to x'' = x' - (2 x'_1 / v_1) v. Only the
// co-normal choice v = sigma n / |sigma n| recovers the Robin condition
// -J.n = kappa p with kappa = P sqrt(sigma_n) / sqrt(pi).

#include <robinsim/coefficients.hpp>
#include <robinsim/errors.hpp>
#include <robinsim/euler1d.hpp>
#include <robinsim/histogram.hpp>
#include <robinsim/parallel.hpp>
#include <robinsim/rng.hpp>
#include <robinsim/special_functions.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace robinsim {

enum class ReflectionRule { conormal, normal, custom };

/// v = sigma n / |sigma n| for n = (1, 0, ..., 0), i.e. the normalized first
/// column of sigma.
template <std::size_t D>
Vec<D> conormal_direction(const Mat<D>& sigma) {
  Vec<D> v{};
  double norm2 = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    v[i] = sigma[i][0];
    norm2 += v[i] * v[i];
  }
  const double norm = std::sqrt(norm2);
  for (double& c : v) c /= norm;
  return v;
}

/// Move x' (with x'_1 < 0) along v back into the half space. The first
/// coordinate is set to -x'_1 exactly, so it does not depend on v.
template <std::size_t D>
Vec<D> reflect_oblique(const Vec<D>& x_prime, const Vec<D>& v) {
  if (v[0] == 0.0) throw ConfigError("reflection direction is tangent to the boundary (v_1 = 0)");
  const double s = 2.0 * x_prime[0] / v[0];
  Vec<D> out;
  out[0] = -x_prime[0];
  for (std::size_t i = 1; i < D; ++i) out[i] = x_prime[i] - s * v[i];
  return out;
}

inline double kappa_to_P_nd(double kappa, double sigma_n) {
  if (!(sigma_n > 0.0)) throw DomainError("kappa_to_P_nd requires sigma_n > 0");
  return kappa * sqrt_pi / std::sqrt(sigma_n);
}

template <std::size_t D>
struct BoundarySpecNd {
  using Point = Vec<D>;
  using AbsorptionField = std::function<double(const Point& boundary_point)>;

  double P = 0.0;                ///< used when P_field is empty
  AbsorptionField P_field;       ///< optional P(y_B) on the hyperplane x_1 = 0
  ReflectionRule rule = ReflectionRule::conormal;
  Point custom_direction{};      ///< unit vector with v_1 > 0, for ReflectionRule::custom

  double absorption(const Point& boundary_point) const {
    const double p = P_field ? P_field(boundary_point) : P;
    if (!(p >= 0.0)) throw DomainError("absorption parameter must be non-negative");
    return p;
  }

  Point direction(const HalfSpaceModel<D>& model) const {
    switch (rule) {
      case ReflectionRule::conormal:
        return conormal_direction(model.sigma());
      case ReflectionRule::normal: {
        Point n{};
        n[0] = 1.0;
        return n;
      }
      case ReflectionRule::custom:
        break;
    }
    double norm2 = 0.0;
    for (double c : custom_direction) norm2 += c * c;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) throw ConfigError("custom reflection direction must be a unit vector");
    if (!(custom_direction[0] > 0.0)) throw ConfigError("custom reflection direction needs v_1 > 0");
    return custom_direction;
  }
};

namespace detail {

template <std::size_t D>
Vec<D> euler_proposal(const Vec<D>& x, const Vec<D>& drift, double dt, double noise_scale,
                      const Mat<D>& b, const Vec<D>& z) {
  Vec<D> out;
  for (std::size_t i = 0; i < D; ++i) {
    double bz = 0.0;
    for (std::size_t k = 0; k < D; ++k) bz += b[i][k] * z[k];
    out[i] = x[i] + drift[i] * dt + noise_scale * bz;
  }
  return out;
}

template <std::size_t D, class UniformSource>
std::optional<Vec<D>> resolve_crossing(const Vec<D>& proposal, double dt, const BoundarySpecNd<D>& boundary,
                                       const Vec<D>& v, UniformSource&& uniform) {
  if (proposal[0] >= 0.0) return proposal;
  Vec<D> projected = proposal;
  projected[0] = 0.0;
  const double p_term = boundary.absorption(projected) * std::sqrt(dt);
  if (p_term > 1.0) throw DomainError("P*sqrt(dt) exceeds 1 at a boundary point; reduce dt");
  if (uniform() < p_term) return std::nullopt;
  return reflect_oblique(proposal, v);
}

}  // namespace detail

/// One Euler step from x (x_1 > 0) with D standard normal draws z. Returns
/// the next point or nullopt when absorbed; `uniform` is called only on a
/// boundary crossing.
template <std::size_t D, class UniformSource>
std::optional<Vec<D>> step_nd(const Vec<D>& x, double t, double dt, const HalfSpaceModel<D>& model,
                              const BoundarySpecNd<D>& boundary, const Vec<D>& z, UniformSource&& uniform) {
  const Vec<D> proposal =
      detail::euler_proposal(x, model.drift(x, t), dt, std::sqrt(2.0 * dt), model.factor(), z);
  return detail::resolve_crossing(proposal, dt, boundary, boundary.direction(model), uniform);
}

template <std::size_t D>
struct SimConfigNd {
  HalfSpaceModel<D> model{identity_matrix<D>()};
  BoundarySpecNd<D> boundary;
  Vec<D> x0{};
  double T = 1.0;
  double dt = 1e-2;
  std::uint64_t n = 1000;
  std::uint64_t seed = default_seed;
  /// Per-axis marginal binning; default 200 bins on [0, 3] for x_1 and
  /// [-3, 3] for the tangential axes.
  std::optional<std::array<HistogramSpec, D>> marginals;
  /// Joint (x_1, x_2) histogram bin counts; the ranges follow the marginals.
  std::size_t joint_bins_x = 100;
  std::size_t joint_bins_y = 200;
  unsigned workers = 0;

  std::array<HistogramSpec, D> marginal_specs() const {
    if (marginals) return *marginals;
    std::array<HistogramSpec, D> specs;
    specs[0] = {0.0, 3.0, 200};
    for (std::size_t i = 1; i < D; ++i) specs[i] = {-3.0, 3.0, 200};
    return specs;
  }

  void validate() const {
    if (!(x0[0] > 0.0)) throw ConfigError("x0 must lie inside the half space (x0_1 > 0)");
    if (!boundary.P_field) {
      if (!(boundary.P >= 0.0)) throw ConfigError("P must be non-negative");
      if (boundary.P * std::sqrt(dt) > 1.0) {
        throw ConfigError("P*sqrt(dt) = " + std::to_string(boundary.P * std::sqrt(dt)) + " exceeds 1; reduce dt");
      }
    }
    if (n == 0) throw ConfigError("trajectory count must be positive");
    step_count(T, dt);
    boundary.direction(model);
  }
};

/// Survivor count plus per-axis marginal and joint (x_1, x_2) histograms.
template <std::size_t D>
struct EnsembleResultNd {
  std::uint64_t n_total = 0;
  std::uint64_t n_survived = 0;
  std::array<Histogram1D, D> marginals;
  Histogram2D joint;
  double dt = 0.0;
  std::uint64_t seed = 0;

  std::uint64_t n_terminated() const { return n_total - n_survived; }
  double survival() const { return static_cast<double>(n_survived) / static_cast<double>(n_total); }
  double standard_error() const {
    const double p = survival();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n_total));
  }

  void merge(const EnsembleResultNd& other) {
    n_total += other.n_total;
    n_survived += other.n_survived;
    for (std::size_t i = 0; i < D; ++i) marginals[i].merge(other.marginals[i]);
    joint.merge(other.joint);
  }

  DensityTable marginal_density(std::size_t axis) const { return density_from_histogram(marginals.at(axis), n_total); }

  bool operator==(const EnsembleResultNd&) const = default;
};

/// Simulate config.n trajectories; trajectory i uses RandomStream(seed, i)
/// and consumes D normals per step plus one uniform per boundary crossing,
/// independently of the reflection rule.
template <std::size_t D>
EnsembleResultNd<D> run_ensemble_nd(const SimConfigNd<D>& config) {
  config.validate();
  const std::uint64_t steps = step_count(config.T, config.dt);
  const auto specs = config.marginal_specs();

  EnsembleResultNd<D> proto;
  for (std::size_t i = 0; i < D; ++i) proto.marginals[i] = Histogram1D(specs[i].lo, specs[i].hi, specs[i].bins);
  proto.joint = Histogram2D(specs[0].lo, specs[0].hi, config.joint_bins_x, specs[1].lo, specs[1].hi,
                            config.joint_bins_y);
  proto.dt = config.dt;
  proto.seed = config.seed;

  const double dt = config.dt;
  const double noise_scale = std::sqrt(2.0 * dt);
  const Vec<D> v = config.boundary.direction(config.model);
  const Mat<D>& b = config.model.factor();
  const auto& model = config.model;

  auto body = [&](EnsembleResultNd<D>& acc, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(config.seed, i);
      auto uniform = [&rng] { return rng.uniform(); };
      Vec<D> x = config.x0;
      bool alive = true;
      for (std::uint64_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        Vec<D> z;
        for (double& c : z) c = rng.normal();
        const Vec<D> drift = model.has_constant_drift() ? model.constant_drift() : model.drift(x, t);
        const auto next =
            detail::resolve_crossing(detail::euler_proposal(x, drift, dt, noise_scale, b, z), dt, config.boundary, v, uniform);
        if (!next) {
          alive = false;
          break;
        }
        x = *next;
      }
      ++acc.n_total;
      if (alive) {
        ++acc.n_survived;
        for (std::size_t a = 0; a < D; ++a) acc.marginals[a].add(x[a]);
        acc.joint.add(x[0], x[1]);
      }
    }
  };
  return for_each_chunk(config.n, config.workers, proto, body);
}

}  // namespace robinsim
