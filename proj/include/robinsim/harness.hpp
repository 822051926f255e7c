#pragma once

// Maps an ExperimentConfig onto the engines and writes the CSV artifacts of
// each subcommand into config.out.

#include <robinsim/analytic1d.hpp>
#include <robinsim/blverify.hpp>
#include <robinsim/config.hpp>
#include <robinsim/convergence.hpp>
#include <robinsim/csv.hpp>
#include <robinsim/euler1d.hpp>
#include <robinsim/euler_nd.hpp>
#include <robinsim/fpe.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace robinsim {

inline SimConfig1D make_sim1d(const ExperimentConfig& c, double dt) {
  SimConfig1D s;
  s.model = c.model_1d();
  s.boundary.P = c.P;
  s.x0 = c.x0.at(0);
  s.T = c.T;
  s.dt = dt;
  s.n = c.n;
  s.seed = c.seed;
  s.workers = c.workers;
  if (c.bins || c.hist_lo || c.hist_hi) {
    HistogramSpec h = s.default_histogram();
    if (c.bins) h.bins = *c.bins;
    if (c.hist_lo) h.lo = *c.hist_lo;
    if (c.hist_hi) h.hi = *c.hist_hi;
    s.histogram = h;
  }
  return s;
}

inline SimConfigNd<2> make_simnd(const ExperimentConfig& c, double dt) {
  SimConfigNd<2> s;
  s.model = c.model_2d();
  s.boundary.P = c.P;
  s.boundary.rule = c.reflection;
  if (c.reflection == ReflectionRule::custom) s.boundary.custom_direction = {c.direction.at(0), c.direction.at(1)};
  s.x0 = {c.x0.at(0), c.x0.at(1)};
  s.T = c.T;
  s.dt = dt;
  s.n = c.n;
  s.seed = c.seed;
  s.workers = c.workers;
  if (c.bins) {
    auto specs = s.marginal_specs();
    for (auto& spec : specs) spec.bins = *c.bins;
    s.marginals = specs;
  }
  return s;
}

inline FpeConfig1D make_fpe1d(const ExperimentConfig& c) {
  FpeConfig1D f;
  f.model = c.model_1d();
  f.kappa = c.kappa;
  f.x0 = c.x0.at(0);
  f.T = c.T;
  f.dx = c.dx.value_or(0.01);
  f.dt = c.pde_dt.value_or(0.0);
  f.length = c.length;
  return f;
}

inline FpeConfig2D make_fpe2d(const ExperimentConfig& c) {
  FpeConfig2D f;
  f.model = c.model_2d();
  f.kappa = c.kappa;
  f.x0 = {c.x0.at(0), c.x0.at(1)};
  f.T = c.T;
  f.dx = c.dx.value_or(0.02);
  f.dt = c.pde_dt.value_or(0.0);
  f.Lx = c.Lx;
  f.Ly = c.Ly;
  if (c.max_iterations) f.max_iterations = *c.max_iterations;
  return f;
}

inline RobinParams1D make_robin_params(const ExperimentConfig& c) {
  const auto model = c.model_1d();
  return {model.diffusion(0.0, 0.0), model.drift(0.0, 0.0), c.kappa, c.x0.at(0)};
}

/// Survival probability at T from the configured reference source.
inline double reference_survival(const ExperimentConfig& c) {
  switch (c.reference) {
    case ReferenceSource::value:
      return c.reference_value.value();
    case ReferenceSource::analytic:
      return survival_analytic(c.T, make_robin_params(c));
    case ReferenceSource::fpe:
      if (c.dim == 1) return grid_survival(solve_fpe_1d(make_fpe1d(c)).grid);
      return grid_survival(solve_fpe_2d(make_fpe2d(c)).grid);
  }
  return 0.0;
}

inline Estimate estimate_survival(const ExperimentConfig& c, double dt) {
  if (c.dim == 1) {
    const auto r = run_ensemble_1d(make_sim1d(c, dt));
    return {r.survival(), r.standard_error()};
  }
  const auto r = run_ensemble_nd(make_simnd(c, dt));
  return {r.survival(), r.standard_error()};
}

inline ConvergenceTable run_convergence(const ExperimentConfig& c) {
  const double reference = reference_survival(c);
  return run_convergence(c.dt, reference, [&c](double dt) { return estimate_survival(c, dt); });
}

namespace detail {

inline std::filesystem::path out_file(const ExperimentConfig& c, const std::string& name) {
  return std::filesystem::path(c.out) / name;
}

/// `stem.csv` for a single dt, `stem_<k>.csv` (k = 0, 1, ...) otherwise.
inline std::string per_dt_name(const std::string& stem, std::size_t k, std::size_t count) {
  return count == 1 ? stem + ".csv" : stem + "_" + std::to_string(k) + ".csv";
}

inline Provenance provenance(const ExperimentConfig& c, std::vector<double> dt) { return {c.seed, std::move(dt), c.n}; }

inline void write_density(const DensityTable& d, const std::string& axis, const Provenance& prov,
                          const std::filesystem::path& path) {
  if (axis.empty()) {
    CsvTable t({"bin_lo", "bin_hi", "density"}, prov);
    for (std::size_t k = 0; k < d.size(); ++k) t.row(d.bin_lo[k], d.bin_hi[k], d.density[k]);
    t.save(path);
  } else {
    CsvTable t({"axis", "bin_lo", "bin_hi", "density"}, prov);
    for (std::size_t k = 0; k < d.size(); ++k) t.row(axis, d.bin_lo[k], d.bin_hi[k], d.density[k]);
    t.save(path);
  }
}

}  // namespace detail

/// Run the experiment described by `c` and return the files written.
inline std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& c) {
  std::vector<std::filesystem::path> written;
  auto save = [&](const CsvTable& t, const std::string& name) {
    const auto path = detail::out_file(c, name);
    t.save(path);
    written.push_back(path);
  };

  switch (c.engine) {
    case Engine::sim1d: {
      CsvTable survival({"dt", "n", "n_sur", "p_hat", "stderr"}, detail::provenance(c, c.dt));
      for (std::size_t k = 0; k < c.dt.size(); ++k) {
        const auto r = run_ensemble_1d(make_sim1d(c, c.dt[k]));
        survival.row(c.dt[k], r.n_total, r.n_survived, r.survival(), r.standard_error());
        const auto path = detail::out_file(c, detail::per_dt_name("density", k, c.dt.size()));
        detail::write_density(empirical_density(r), "", detail::provenance(c, {c.dt[k]}), path);
        written.push_back(path);
      }
      save(survival, "survival.csv");
      break;
    }
    case Engine::simnd: {
      CsvTable survival({"dt", "n", "n_sur", "p_hat", "stderr"}, detail::provenance(c, c.dt));
      for (std::size_t k = 0; k < c.dt.size(); ++k) {
        const auto r = run_ensemble_nd(make_simnd(c, c.dt[k]));
        survival.row(c.dt[k], r.n_total, r.n_survived, r.survival(), r.standard_error());
        const auto prov = detail::provenance(c, {c.dt[k]});
        const char* axes[] = {"x", "y"};
        for (std::size_t a = 0; a < 2; ++a) {
          const auto path = detail::out_file(c, detail::per_dt_name(std::string("marginal_") + axes[a], k, c.dt.size()));
          detail::write_density(r.marginal_density(a), axes[a], prov, path);
          written.push_back(path);
        }
      }
      save(survival, "survival.csv");
      break;
    }
    case Engine::fpe: {
      const Provenance prov{c.seed, {}, 0};
      if (c.dim == 1) {
        const auto fc = make_fpe1d(c);
        const auto r = solve_fpe_1d(fc);
        CsvTable grid({"x", "p"}, prov);
        for (std::size_t i = 0; i < r.grid.nx; ++i) grid.row(r.grid.x(i), r.grid.at(i));
        save(grid, "grid.csv");
        CsvTable survival({"dx", "pde_dt", "steps", "p_sur", "iterations"}, prov);
        survival.row(fc.dx, r.diagnostics.step, std::uint64_t{r.diagnostics.steps}, grid_survival(r.grid),
                     std::uint64_t{0});
        save(survival, "survival.csv");
      } else {
        const auto fc = make_fpe2d(c);
        const auto r = solve_fpe_2d(fc);
        CsvTable grid({"x", "y", "p"}, prov);
        for (std::size_t i = 0; i < r.grid.nx; ++i) {
          for (std::size_t j = 0; j < r.grid.ny; ++j) grid.row(r.grid.x(i), r.grid.y(j), r.grid.at(i, j));
        }
        save(grid, "grid.csv");
        const auto m = grid_marginals(r.grid);
        CsvTable mx({"axis", "x", "density"}, prov);
        for (std::size_t i = 0; i < m.x.coord.size(); ++i) mx.row("x", m.x.coord[i], m.x.density[i]);
        save(mx, "marginal_x.csv");
        CsvTable my({"axis", "y", "density"}, prov);
        for (std::size_t j = 0; j < m.y.coord.size(); ++j) my.row("y", m.y.coord[j], m.y.density[j]);
        save(my, "marginal_y.csv");
        CsvTable survival({"dx", "pde_dt", "steps", "p_sur", "iterations"}, prov);
        survival.row(fc.dx, r.diagnostics.step, std::uint64_t{r.diagnostics.steps}, grid_survival(r.grid),
                     std::uint64_t{r.diagnostics.total_iterations});
        save(survival, "survival.csv");
      }
      break;
    }
    case Engine::analytic: {
      const auto p = make_robin_params(c);
      const double hi = c.x_max.value_or(p.x0 + std::abs(p.a) * c.T + 6.0 * std::sqrt(p.sigma * c.T));
      CsvTable t({"x", "p"}, Provenance{c.seed, {}, 0});
      for (std::size_t k = 0; k < c.points; ++k) {
        const double x = hi * static_cast<double>(k) / static_cast<double>(c.points - 1);
        t.row(x, drift_density(x, c.T, p));
      }
      save(t, "analytic.csv");
      break;
    }
    case Engine::blcheck: {
      const auto p = make_robin_params(c);
      const double dt = c.dt.front();
      const double h = std::sqrt(p.sigma * dt) / 20.0;
      const double hi = c.x_max.value_or(p.x0 + std::abs(p.a) * c.T + 10.0 * std::sqrt(p.sigma * c.T));
      const auto nodes = static_cast<std::size_t>(std::ceil(hi / h)) + 1;
      PropagatorInput in;
      in.model = c.model_1d();
      in.P = c.P;
      in.dt = dt;
      in.t = c.T;
      in.density.h = h;
      in.density.values.resize(nodes);
      for (std::size_t k = 0; k < nodes; ++k) in.density.values[k] = drift_density(in.density.y(k), c.T, p);
      const auto out = apply_propagator_1d(in);
      const auto slope = boundary_derivative_check(out, in.density, c.P, p.sigma, dt);

      const double yi = 10.0 * std::sqrt(p.sigma * dt);
      const double outer_slope = (drift_density(yi + h, c.T + dt, p) - drift_density(yi - h, c.T + dt, p)) / (2.0 * h);
      const double flux = flux_integral(in.density, c.P, p.sigma, dt);
      const double loss_rate = (grid_mass(in.density) - grid_mass(out)) / dt;
      double linf = 0.0;
      for (std::size_t k = 0; k < nodes; ++k) {
        const double y = out.y(k);
        if (y < yi) continue;  // the scheme's boundary layer differs from the Robin solution there
        linf = std::max(linf, std::abs(out.values[k] - drift_density(y, c.T + dt, p)));
      }
      auto ratio = [](double m, double q) { return q != 0.0 ? m / q : std::nan(""); };
      CsvTable t({"quantity", "measured", "predicted", "ratio"}, detail::provenance(c, {dt}));
      t.row("boundary_slope", slope.measured_slope, slope.predicted_slope, slope.ratio);
      t.row("interior_slope", slope.interior_slope, outer_slope, ratio(slope.interior_slope, outer_slope));
      t.row("flux_integral", flux, c.kappa * in.density.values[0], ratio(flux, c.kappa * in.density.values[0]));
      t.row("mass_loss_rate", loss_rate, flux, ratio(loss_rate, flux));
      t.row("interior_linf_over_dt", linf / dt, 1.0, linf / dt);
      save(t, "blreport.csv");
      break;
    }
    case Engine::convergence: {
      const auto table = run_convergence(c);
      CsvTable t({"dt", "estimate", "reference", "bias", "stderr", "ratio"}, detail::provenance(c, c.dt));
      for (const auto& r : table.rows) t.row(r.dt, r.estimate, r.reference, r.bias, r.std_error, r.ratio);
      save(t, "convergence.csv");
      break;
    }
  }
  return written;
}

}  // namespace robinsim
