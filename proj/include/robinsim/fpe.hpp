#pragma once

// Crank-Nicolson reference solvers for the Fokker-Planck equation with a
// Robin (radiation) boundary at x = 0.
//
// Both solvers use a vertex-centred finite-volume discretization: node 0 sits
// on the boundary and owns a half cell [0, dx/2], so the boundary flux enters
// exactly as -J(0) = kappa p_0 and the trapezoidal mass changes only through
// that flux (plus the negligible leak into the zero far boundary).
//
// The delta initial condition is replaced by the exact free-space Gaussian at
// a small start time t0 = (3 dx)^2 / (2 sigma_11); the boundary is at least a
// few standard deviations away for any x0 the grid resolves.

#include <robinsim/coefficients.hpp>
#include <robinsim/errors.hpp>
#include <robinsim/histogram.hpp>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace robinsim {

/// Node values on [0, Lx] (1D) or [0, Lx] x [-Ly, Ly] (2D). Node (i, j) is
/// at (i dx, y_lo + j dy) and stored at i * ny + j; in 1D ny == 1.
struct DensityGrid {
  int dims = 1;
  double dx = 0.0;
  double dy = 0.0;
  double y_lo = 0.0;
  std::size_t nx = 0;
  std::size_t ny = 1;
  double time = 0.0;
  std::vector<double> values;

  double x(std::size_t i) const { return static_cast<double>(i) * dx; }
  double y(std::size_t j) const { return y_lo + static_cast<double>(j) * dy; }
  double& at(std::size_t i, std::size_t j = 0) { return values[i * ny + j]; }
  double at(std::size_t i, std::size_t j = 0) const { return values[i * ny + j]; }
  double min_value() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }
};

/// Trapezoidal weight of node k on a uniform line of n nodes with spacing h.
inline double trapezoid_weight(std::size_t k, std::size_t n, double h) {
  if (n == 1) return 1.0;
  return (k == 0 || k + 1 == n) ? 0.5 * h : h;
}

/// Trapezoidal integral of the grid over its domain.
inline double grid_survival(const DensityGrid& g) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double wx = trapezoid_weight(i, g.nx, g.dx);
    double row = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j) row += trapezoid_weight(j, g.ny, g.dy) * g.at(i, j);
    total += wx * row;
  }
  return total;
}

/// Marginal density sampled at grid nodes.
struct GridMarginal {
  std::vector<double> coord;
  std::vector<double> density;
};

struct GridMarginals {
  GridMarginal x;
  GridMarginal y;
};

inline GridMarginals grid_marginals(const DensityGrid& g) {
  if (g.dims != 2) throw DomainError("grid_marginals requires a 2D grid");
  GridMarginals m;
  m.x.coord.resize(g.nx);
  m.x.density.assign(g.nx, 0.0);
  m.y.coord.resize(g.ny);
  m.y.density.assign(g.ny, 0.0);
  for (std::size_t i = 0; i < g.nx; ++i) m.x.coord[i] = g.x(i);
  for (std::size_t j = 0; j < g.ny; ++j) m.y.coord[j] = g.y(j);
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double wx = trapezoid_weight(i, g.nx, g.dx);
    for (std::size_t j = 0; j < g.ny; ++j) {
      const double p = g.at(i, j);
      m.x.density[i] += trapezoid_weight(j, g.ny, g.dy) * p;
      m.y.density[j] += wx * p;
    }
  }
  return m;
}

/// Average of the piecewise-linear interpolant of `m` over each bin of
/// `bins`; zero outside the sampled range.
inline std::vector<double> average_over_bins(const GridMarginal& m, const DensityTable& bins) {
  std::vector<double> out(bins.size(), 0.0);
  if (m.coord.size() < 2) return out;
  auto value = [&m](double x) {
    if (x < m.coord.front() || x > m.coord.back()) return 0.0;
    const auto it = std::upper_bound(m.coord.begin(), m.coord.end() - 1, x);
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(it - m.coord.begin()));
    const double x0 = m.coord[k - 1];
    const double x1 = m.coord[k];
    const double w = (x - x0) / (x1 - x0);
    return (1.0 - w) * m.density[k - 1] + w * m.density[k];
  };
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const double lo = bins.bin_lo[b];
    const double hi = bins.bin_hi[b];
    // Integrate exactly: the interpolant is linear between breakpoints.
    std::vector<double> pts{lo};
    for (double c : m.coord) {
      if (c > lo && c < hi) pts.push_back(c);
    }
    pts.push_back(hi);
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      integral += 0.5 * (value(pts[k]) + value(pts[k + 1])) * (pts[k + 1] - pts[k]);
    }
    out[b] = integral / (hi - lo);
  }
  return out;
}

/// Per-run bookkeeping of the time stepper.
struct FpeDiagnostics {
  std::size_t steps = 0;
  double start_time = 0.0;
  double step = 0.0;
  std::vector<double> mass;           ///< trapezoidal mass before the first and after every step
  std::vector<double> boundary_loss;  ///< CN-averaged kappa-flux times step, per step
  std::size_t total_iterations = 0;
  std::size_t max_iterations = 0;
  double max_residual = 0.0;
  /// Largest negative excursion of the final grid, max(0, -min p). Not clipped:
  /// centred cross differences are not monotone when |sigma_12| > sigma_11, so
  /// under-resolved anisotropic runs can dip slightly below zero.
  double undershoot = 0.0;
};

struct FpeResult {
  DensityGrid grid;
  FpeDiagnostics diagnostics;
};

namespace detail {

/// Step count and CN step that land exactly on T from t0.
inline std::pair<std::size_t, double> fpe_schedule(double t0, double T, double dt) {
  if (!(T > t0)) throw ConfigError("horizon T is shorter than the smoothing start time of the initial condition");
  const auto steps = static_cast<std::size_t>(std::ceil((T - t0) / dt - 1e-9));
  return {std::max<std::size_t>(steps, 1), (T - t0) / static_cast<double>(std::max<std::size_t>(steps, 1))};
}

inline void check_mass_increase(double before, double after, double t) {
  if (after > before + 1e-5) {
    throw NumericError("stability alarm: mass increased from " + std::to_string(before) + " to " +
                       std::to_string(after) + " at t=" + std::to_string(t));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1D
// ---------------------------------------------------------------------------

struct FpeConfig1D {
  CoefficientModel1D model = CoefficientModel1D::constant(0.0, 1.0);
  double kappa = 0.0;
  double x0 = 1.0;
  double T = 1.0;
  double dx = 0.01;
  double dt = 0.0;                 ///< 0 selects dx / 2
  std::optional<double> length;    ///< default x0 + |a| T + 10 sqrt(sigma T)

  double domain_length() const {
    if (length) return *length;
    const double a = model.drift(x0, 0.0);
    const double s = model.diffusion(x0, 0.0);
    return x0 + std::abs(a) * T + 10.0 * std::sqrt(s * T);
  }

  double pde_step() const { return dt > 0.0 ? dt : 0.5 * dx; }

  void validate() const {
    if (!(kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
    if (!(dx > 0.0)) throw ConfigError("grid spacing must be positive");
    if (!(x0 > 0.0)) throw ConfigError("x0 must be positive");
    if (x0 < 6.0 * dx) throw ConfigError("grid does not resolve x0; reduce dx");
    if (!(T > 0.0)) throw ConfigError("horizon T must be positive");
    if (pde_step() > dx * (1.0 + 1e-12)) throw ConfigError("pde time step must not exceed dx");
    if (!(domain_length() > x0 + 6.0 * dx)) throw ConfigError("domain too short for x0");
  }
};

/// Crank-Nicolson stepper on nodes x_i = i dx, i = 0..M, with p_M = 0.
class Fpe1DStepper {
 public:
  Fpe1DStepper(CoefficientModel1D model, double kappa, double dx, std::size_t nodes)
      : model_(std::move(model)), kappa_(kappa), dx_(dx), n_(nodes) {
    if (n_ < 3) throw ConfigError("1D grid needs at least 3 nodes");
  }

  std::size_t nodes() const { return n_; }
  double dx() const { return dx_; }

  /// Node i of the operator row i as (lower, diag, upper): dp_i/dt = l p_{i-1} + d p_i + u p_{i+1}.
  void assemble(double t, std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper) const {
    const std::size_t m = n_ - 1;  // unknowns 0..m-1, node m is zero
    lower.assign(m, 0.0);
    diag.assign(m, 0.0);
    upper.assign(m, 0.0);
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      // Face between i and i+1: J = a_f (p_i + p_{i+1}) / 2 - (s_{i+1} p_{i+1} - s_i p_i) / dx
      const double xf = (static_cast<double>(i) + 0.5) * dx_;
      const double a = model_.drift(xf, t);
      const double ci = 0.5 * a + model_.diffusion(static_cast<double>(i) * dx_, t) / dx_;
      const double cj = 0.5 * a - model_.diffusion(static_cast<double>(i + 1) * dx_, t) / dx_;
      const double wi = 1.0 / cell_width(i);
      diag[i] -= ci * wi;
      if (i + 1 < m) upper[i] -= cj * wi;
      if (i + 1 < m) {
        const double wj = 1.0 / cell_width(i + 1);
        lower[i + 1] += ci * wj;
        diag[i + 1] += cj * wj;
      }
    }
    diag[0] -= kappa_ / cell_width(0);
  }

  /// Advance p (size nodes(), last entry zero) from t to t + h.
  void step(std::vector<double>& p, double t, double h) const {
    const std::size_t m = n_ - 1;
    std::vector<double> l0, d0, u0, l1, d1, u1;
    assemble(t, l0, d0, u0);
    assemble(t + h, l1, d1, u1);
    std::vector<double> rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
      double lp = d0[i] * p[i];
      if (i > 0) lp += l0[i] * p[i - 1];
      if (i + 1 < m) lp += u0[i] * p[i + 1];
      rhs[i] = p[i] + 0.5 * h * lp;
    }
    // Thomas algorithm on (I - h/2 L1).
    std::vector<double> c(m), d(m);
    double b = 1.0 - 0.5 * h * d1[0];
    c[0] = -0.5 * h * u1[0] / b;
    d[0] = rhs[0] / b;
    for (std::size_t i = 1; i < m; ++i) {
      const double a = -0.5 * h * l1[i];
      b = 1.0 - 0.5 * h * d1[i] - a * c[i - 1];
      c[i] = (i + 1 < m) ? -0.5 * h * u1[i] / b : 0.0;
      d[i] = (rhs[i] - a * d[i - 1]) / b;
    }
    p[m - 1] = d[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) p[i] = d[i] - c[i] * p[i + 1];
    p[m] = 0.0;
  }

  /// Trapezoidal mass of node values.
  double mass(const std::vector<double>& p) const {
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) total += trapezoid_weight(i, n_, dx_) * p[i];
    return total;
  }

  double boundary_efflux(const std::vector<double>& p) const { return kappa_ * p[0]; }

 private:
  double cell_width(std::size_t i) const { return i == 0 ? 0.5 * dx_ : dx_; }

  CoefficientModel1D model_;
  double kappa_;
  double dx_;
  std::size_t n_;
};

inline FpeResult solve_fpe_1d(const FpeConfig1D& config) {
  config.validate();
  const double dx = config.dx;
  const auto nodes = static_cast<std::size_t>(std::llround(config.domain_length() / dx)) + 1;
  Fpe1DStepper stepper(config.model, config.kappa, dx, nodes);

  const double s0 = config.model.diffusion(config.x0, 0.0);
  const double t0 = 9.0 * dx * dx / (2.0 * s0);
  const auto [steps, h] = detail::fpe_schedule(t0, config.T, config.pde_step());
  const double centre = config.x0 + config.model.drift(config.x0, 0.0) * t0;
  const double var = 2.0 * s0 * t0;

  std::vector<double> p(nodes, 0.0);
  for (std::size_t i = 0; i + 1 < nodes; ++i) {
    const double d = static_cast<double>(i) * dx - centre;
    p[i] = std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
  }
  const double m0 = stepper.mass(p);
  for (double& v : p) v /= m0;

  FpeResult result;
  auto& diag = result.diagnostics;
  diag.start_time = t0;
  diag.step = h;
  diag.steps = steps;
  diag.mass.push_back(stepper.mass(p));
  double t = t0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double efflux_before = stepper.boundary_efflux(p);
    stepper.step(p, t, h);
    t = t0 + static_cast<double>(k + 1) * h;
    diag.boundary_loss.push_back(0.5 * h * (efflux_before + stepper.boundary_efflux(p)));
    diag.mass.push_back(stepper.mass(p));
    detail::check_mass_increase(diag.mass[k], diag.mass[k + 1], t);
  }

  auto& g = result.grid;
  g.dims = 1;
  g.dx = dx;
  g.nx = nodes;
  g.ny = 1;
  g.time = config.T;
  g.values = std::move(p);
  diag.undershoot = std::max(0.0, -g.min_value());
  return result;
}

// ---------------------------------------------------------------------------
// 2D
// ---------------------------------------------------------------------------

enum class Preconditioner { ilut, diagonal };

struct FpeConfig2D {
  HalfSpaceModel<2> model{identity_matrix<2>()};
  double kappa = 0.0;
  Vec<2> x0{0.3, 0.0};
  double T = 0.5;
  double dx = 0.02;        ///< same spacing in x and y
  double dt = 0.0;         ///< 0 selects dx / 2
  double Lx = 4.0;
  double Ly = 6.0;
  double tolerance = 1e-10;
  int max_iterations = 2000;
  Preconditioner preconditioner = Preconditioner::ilut;

  double pde_step() const { return dt > 0.0 ? dt : 0.5 * dx; }

  void validate() const {
    if (!(kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
    if (!(dx > 0.0)) throw ConfigError("grid spacing must be positive");
    if (!(x0[0] > 0.0)) throw ConfigError("x0 must lie inside the half plane");
    if (x0[0] < 6.0 * dx) throw ConfigError("grid does not resolve x0; reduce dx");
    if (!(Lx > x0[0]) || !(Ly > std::abs(x0[1]))) throw ConfigError("domain does not contain x0");
    if (!(T > 0.0)) throw ConfigError("horizon T must be positive");
    if (pde_step() > dx * (1.0 + 1e-12)) throw ConfigError("pde time step must not exceed dx");
    if (!(tolerance > 0.0) || max_iterations <= 0) throw ConfigError("invalid linear-solver settings");
  }
};

namespace detail {

/// Finite-volume operator L with dp/dt = L p on the unknown nodes
/// i = 0..nx-2, j = 1..ny-2 of a 2D grid.
class Fpe2DOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  Fpe2DOperator(const HalfSpaceModel<2>& model, double kappa, double dx, double dy, double y_lo, std::size_t nx,
                std::size_t ny)
      : model_(model), kappa_(kappa), dx_(dx), dy_(dy), y_lo_(y_lo), nx_(nx), ny_(ny) {}

  std::size_t unknowns() const { return (nx_ - 1) * (ny_ - 2); }

  bool is_unknown(long i, long j) const {
    return i >= 0 && j >= 1 && i < static_cast<long>(nx_) - 1 && j < static_cast<long>(ny_) - 1;
  }
  Eigen::Index index(long i, long j) const { return static_cast<Eigen::Index>(i) * (ny_ - 2) + (j - 1); }
  double cell_width(long i) const { return i == 0 ? 0.5 * dx_ : dx_; }
  double area(long i) const { return cell_width(i) * dy_; }

  Matrix assemble(double t) const {
    const double s11 = model_.sigma()[0][0];
    const double s12 = model_.sigma()[0][1];
    const double s22 = model_.sigma()[1][1];
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(unknowns() * 24);

    struct Term {
      long i;
      long j;
      double c;
    };
    // Flux F = sum c_k p_k through a face of length `len`, from cell L into cell R.
    auto face = [&](long li, long lj, long ri, long rj, double len, std::initializer_list<Term> terms) {
      for (const Term& term : terms) {
        if (!is_unknown(term.i, term.j) || term.c == 0.0) continue;
        const Eigen::Index col = index(term.i, term.j);
        if (is_unknown(li, lj)) trip.emplace_back(index(li, lj), col, -term.c * len / area(li));
        if (is_unknown(ri, rj)) trip.emplace_back(index(ri, rj), col, term.c * len / area(ri));
      }
    };

    const long nx = static_cast<long>(nx_);
    const long ny = static_cast<long>(ny_);
    const bool constant = model_.has_constant_drift();
    const Vec<2> a_const = model_.constant_drift();
    auto drift = [&](double x, double y) { return constant ? a_const : model_.drift(Vec<2>{x, y}, t); };

    // x-faces between (i, j) and (i+1, j).
    for (long i = 0; i + 1 < nx; ++i) {
      for (long j = 1; j + 1 < ny; ++j) {
        const double a1 = drift((static_cast<double>(i) + 0.5) * dx_, y(j))[0];
        const double q = s12 / (4.0 * dy_);
        face(i, j, i + 1, j, dy_,
             {{i, j, 0.5 * a1 + s11 / dx_},
              {i + 1, j, 0.5 * a1 - s11 / dx_},
              {i, j + 1, -q},
              {i, j - 1, q},
              {i + 1, j + 1, -q},
              {i + 1, j - 1, q}});
      }
    }
    // y-faces between (i, j) and (i, j+1).
    for (long i = 0; i + 1 < nx; ++i) {
      const double xf = i == 0 ? 0.25 * dx_ : static_cast<double>(i) * dx_;
      for (long j = 0; j + 1 < ny; ++j) {
        const double a2 = drift(xf, y(j) + 0.5 * dy_)[1];
        const double base0 = 0.5 * a2 + s22 / dy_;
        const double base1 = 0.5 * a2 - s22 / dy_;
        const double len = cell_width(i);
        if (i == 0) {
          // d/dx at x = dx/4 from the quadratic through nodes 0, 1, 2, averaged over j and j+1.
          const double q = s12 / (2.0 * dx_);
          face(i, j, i, j + 1, len,
               {{0, j, base0 + 1.25 * q},
                {0, j + 1, base1 + 1.25 * q},
                {1, j, -1.5 * q},
                {1, j + 1, -1.5 * q},
                {2, j, 0.25 * q},
                {2, j + 1, 0.25 * q}});
        } else {
          const double q = s12 / (4.0 * dx_);
          face(i, j, i, j + 1, len,
               {{i, j, base0},
                {i, j + 1, base1},
                {i + 1, j, -q},
                {i - 1, j, q},
                {i + 1, j + 1, -q},
                {i - 1, j + 1, q}});
        }
      }
    }
    // Robin boundary: inflow J(0, y) = -kappa p_0.
    for (long j = 1; j + 1 < ny; ++j) trip.emplace_back(index(0, j), index(0, j), -kappa_ * dy_ / area(0));

    Matrix L(static_cast<Eigen::Index>(unknowns()), static_cast<Eigen::Index>(unknowns()));
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
  }

  double mass(const Eigen::VectorXd& u) const {
    double total = 0.0;
    for (long i = 0; i + 1 < static_cast<long>(nx_); ++i) {
      double row = 0.0;
      for (long j = 1; j + 1 < static_cast<long>(ny_); ++j) row += u[index(i, j)];
      total += area(i) * row;
    }
    return total;
  }

  double boundary_efflux(const Eigen::VectorXd& u) const {
    double row = 0.0;
    for (long j = 1; j + 1 < static_cast<long>(ny_); ++j) row += u[index(0, j)];
    return kappa_ * dy_ * row;
  }

 private:
  double y(long j) const { return y_lo_ + static_cast<double>(j) * dy_; }

  const HalfSpaceModel<2>& model_;
  double kappa_;
  double dx_;
  double dy_;
  double y_lo_;
  std::size_t nx_;
  std::size_t ny_;
};

template <class Solver>
void cn_solve(Solver& solver, const Eigen::VectorXd& rhs, Eigen::VectorXd& u, double tolerance, FpeDiagnostics& diag,
              double t) {
  Eigen::VectorXd next = solver.solveWithGuess(rhs, u);
  const auto iters = static_cast<std::size_t>(solver.iterations());
  diag.total_iterations += iters;
  diag.max_iterations = std::max(diag.max_iterations, iters);
  diag.max_residual = std::max(diag.max_residual, solver.error());
  if (solver.info() != Eigen::Success || !(solver.error() <= tolerance)) {
    throw NumericError("linear solver did not converge at t=" + std::to_string(t) + ": relative residual " +
                       std::to_string(solver.error()) + " after " + std::to_string(iters) + " iterations");
  }
  u = std::move(next);
}

}  // namespace detail

inline FpeResult solve_fpe_2d(const FpeConfig2D& config) {
  config.validate();
  using Matrix = detail::Fpe2DOperator::Matrix;
  const double dx = config.dx;
  const auto nx = static_cast<std::size_t>(std::llround(config.Lx / dx)) + 1;
  const auto ny = static_cast<std::size_t>(std::llround(2.0 * config.Ly / dx)) + 1;
  const double dy = 2.0 * config.Ly / static_cast<double>(ny - 1);
  const double y_lo = -config.Ly;
  const detail::Fpe2DOperator op(config.model, config.kappa, dx, dy, y_lo, nx, ny);
  const auto n = static_cast<Eigen::Index>(op.unknowns());

  // Free-space Gaussian with covariance 2 sigma t0.
  const auto& sig = config.model.sigma();
  const double t0 = 9.0 * dx * dx / (2.0 * sig[0][0]);
  const auto [steps, h] = detail::fpe_schedule(t0, config.T, config.pde_step());
  const Vec<2> a0 = config.model.drift(config.x0, 0.0);
  const double cx = config.x0[0] + a0[0] * t0;
  const double cy = config.x0[1] + a0[1] * t0;
  const double c11 = 2.0 * t0 * sig[0][0];
  const double c12 = 2.0 * t0 * sig[0][1];
  const double c22 = 2.0 * t0 * sig[1][1];
  const double det = c11 * c22 - c12 * c12;
  Eigen::VectorXd u(n);
  for (long i = 0; i + 1 < static_cast<long>(nx); ++i) {
    for (long j = 1; j + 1 < static_cast<long>(ny); ++j) {
      const double ddx = static_cast<double>(i) * dx - cx;
      const double ddy = y_lo + static_cast<double>(j) * dy - cy;
      const double qf = (c22 * ddx * ddx - 2.0 * c12 * ddx * ddy + c11 * ddy * ddy) / det;
      u[op.index(i, j)] = std::exp(-0.5 * qf) / (2.0 * std::numbers::pi * std::sqrt(det));
    }
  }
  u /= op.mass(u);

  FpeResult result;
  auto& diag = result.diagnostics;
  diag.start_time = t0;
  diag.step = h;
  diag.steps = steps;
  diag.mass.push_back(op.mass(u));

  Matrix identity(n, n);
  identity.setIdentity();
  const bool frozen = config.model.has_constant_drift();

  auto run = [&](auto& solver) {
    solver.setTolerance(config.tolerance);
    solver.setMaxIterations(config.max_iterations);
    Matrix L_now = op.assemble(t0);
    Matrix A;  // the solver keeps a reference to it
    for (std::size_t k = 0; k < steps; ++k) {
      const double t_next = t0 + static_cast<double>(k + 1) * h;
      const Eigen::VectorXd rhs = u + 0.5 * h * (L_now * u);
      if (!frozen) L_now = op.assemble(t_next);
      if (k == 0 || !frozen) {
        A = identity - 0.5 * h * L_now;
        solver.compute(A);
        if (solver.info() != Eigen::Success) throw NumericError("preconditioner setup failed");
      }
      const double efflux_before = op.boundary_efflux(u);
      detail::cn_solve(solver, rhs, u, config.tolerance, diag, t_next);
      diag.boundary_loss.push_back(0.5 * h * (efflux_before + op.boundary_efflux(u)));
      diag.mass.push_back(op.mass(u));
      detail::check_mass_increase(diag.mass[k], diag.mass[k + 1], t_next);
    }
  };
  if (config.preconditioner == Preconditioner::ilut) {
    Eigen::BiCGSTAB<Matrix, Eigen::IncompleteLUT<double>> solver;
    solver.preconditioner().setDroptol(1e-6);
    solver.preconditioner().setFillfactor(10);
    run(solver);
  } else {
    Eigen::BiCGSTAB<Matrix, Eigen::DiagonalPreconditioner<double>> solver;
    run(solver);
  }

  auto& g = result.grid;
  g.dims = 2;
  g.dx = dx;
  g.dy = dy;
  g.y_lo = y_lo;
  g.nx = nx;
  g.ny = ny;
  g.time = config.T;
  g.values.assign(nx * ny, 0.0);
  for (long i = 0; i + 1 < static_cast<long>(nx); ++i) {
    for (long j = 1; j + 1 < static_cast<long>(ny); ++j) g.at(i, j) = u[op.index(i, j)];
  }
  result.diagnostics.undershoot = std::max(0.0, -g.min_value());
  return result;
}

}  // namespace robinsim
