// Runs every primary acceptance criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is non-zero if any fails.

#include <robinsim/robinsim.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace robinsim;
namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

int failures = 0;

void report(const char* name, bool pass, const std::string& detail, double seconds) {
  std::printf("%s %-24s %s (%.1f s)\n", pass ? "PASS" : "FAIL", name, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const Mat<2> aniso{{{0.25, 0.4}, {0.4, 1.0}}};

double bin_average(const std::function<double(double)>& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 10, 1e-13) / (hi - lo);
}

// --- one-dimensional bias and order ---------------------------------------

struct BiasRow {
  double dt, bias, se;
};

std::vector<BiasRow> halfline_biases() {
  const double exact = survival_analytic(1.0, RobinParams1D{1.0, 0.0, 1.0, 1.0});
  std::vector<BiasRow> rows;
  for (double dt : {1e-1, 1e-2, 1e-3}) {
    SimConfig1D c;
    c.boundary.P = kappa_to_P(1.0, 1.0);
    c.dt = dt;
    c.n = 1'000'000;
    const auto r = run_ensemble_1d(c);
    rows.push_back({dt, exact - r.survival(), r.standard_error()});
  }
  return rows;
}

void check_halfline(const std::vector<BiasRow>& rows, double seconds) {
  const double expected[] = {0.0456, 0.0132, 0.0039};
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double z = (rows[k].bias - expected[k]) / rows[k].se;
    ok = ok && std::abs(z) <= 3.0;
    detail += fmt("dt=%g bias=%.4f (want %.4f, z=%+.2f) ", rows[k].dt, rows[k].bias, expected[k], z);
  }
  report("halfline-bias", ok, detail, seconds);
}

void check_ratios(const std::vector<BiasRow>& rows) {
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double r = rows[k].bias / rows[k + 1].bias;
    ok = ok && r >= 2.2 && r <= 5.0;
    detail += fmt("ratio=%.3f ", r);
  }
  report("bias-ratios", ok, detail + "in [2.2, 5.0]", 0.0);
}

// --- analytic identities ----------------------------------------------------

void check_identities() {
  Timer timer;
  double max_drift = 0.0, max_image = 0.0, max_survival = 0.0;
  const RobinParams1D sets[] = {{1.0, 0.0, 1.0, 1.0}, {0.5, 0.0, 3.0, 0.2}, {2.0, 0.0, 0.1, 2.5}};
  for (const auto& p : sets) {
    const RobinParams1D reflecting{p.sigma, 0.0, 0.0, p.x0};
    for (double t : {0.1, 1.0}) {
      for (int k = 0; k < 1000; ++k) {
        const double x = 10.0 * k / 999.0;
        max_drift = std::max(max_drift, std::abs(drift_density(x, t, p) - bryan_density(x, t, p)));
        max_image = std::max(max_image, std::abs(bryan_density(x, t, reflecting) - image_sum(x, t, p.sigma, p.x0)));
      }
    }
  }
  for (double a : {0.0, -1.0, 0.7}) {
    max_survival = std::max(max_survival, std::abs(survival_analytic(1.0, RobinParams1D{1.0, a, 0.0, 1.0}) - 1.0));
  }
  const bool ok = max_drift <= 1e-12 && max_image <= 1e-12 && max_survival <= 1e-9;
  report("analytic-identities", ok,
         fmt("drift-vs-zero-drift=%.1e image-sum=%.1e reflecting-survival=%.1e", max_drift, max_image, max_survival),
         timer.seconds());
}

// --- reflecting boundary layer -----------------------------------------------

void check_reflecting() {
  Timer timer;
  SimConfig1D c;
  c.model = CoefficientModel1D::constant(-1.0, 1.0);
  c.boundary.P = 0.0;
  c.dt = 1e-2;
  c.n = 10'000'000;
  const auto r = run_ensemble_1d(c);
  const auto d = empirical_density(r);
  const RobinParams1D p{1.0, -1.0, 0.0, 1.0};
  // Zero flux at the wall: sigma p_x(0) = a p(0).
  const double analytic_slope = std::abs(p.a * drift_density(0.0, 1.0, p) / p.sigma);
  const double width = d.bin_hi[0] - d.bin_lo[0];
  const double slope = (d.density[1] - d.density[0]) / width;
  const bool flat = std::abs(slope) < 0.25 * analytic_slope;

  const double layer = 5.0 * std::sqrt(c.dt);
  const auto n = static_cast<double>(r.n_total);
  std::size_t tested = 0, outside = 0;
  double worst = 0.0, worst_at = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d.bin_lo[k] < layer) continue;
    const double ref = bin_average([&](double x) { return drift_density(x, 1.0, p); }, d.bin_lo[k], d.bin_hi[k]);
    const double q = ref * width;
    const double se = std::sqrt(q * (1.0 - q) / n) / width;
    const double z = (d.density[k] - ref) / se;
    ++tested;
    if (std::abs(z) > 3.0) ++outside;
    if (std::abs(z) > worst) {
      worst = std::abs(z);
      worst_at = d.bin_lo[k];
    }
  }
  report("reflecting-layer", flat && outside == 0,
         fmt("first-bin slope=%.3f (limit %.3f); %zu/%zu bins beyond %.2f outside 3 SE, worst z=%.2f at x=%.2f", slope,
             0.25 * analytic_slope, outside, tested, layer, worst, worst_at),
         timer.seconds());
}

// --- two-dimensional cross-oracle and reflection law ------------------------

FpeConfig2D plane_fpe(const Vec<2>& drift) {
  FpeConfig2D c;
  c.model = HalfSpaceModel<2>(aniso, drift);
  c.kappa = 1.0;
  c.x0 = {0.3, 0.0};
  c.T = 0.5;
  c.dx = 0.02;
  return c;
}

SimConfigNd<2> plane_mc(const Vec<2>& drift, ReflectionRule rule) {
  SimConfigNd<2> c;
  c.model = HalfSpaceModel<2>(aniso, drift);
  c.boundary.P = kappa_to_P_nd(1.0, 0.25);
  c.boundary.rule = rule;
  c.x0 = {0.3, 0.0};
  c.T = 0.5;
  c.dt = 1e-3;
  c.n = 1'000'000;
  return c;
}

struct PlaneRun {
  FpeResult fpe;
  EnsembleResultNd<2> mc;
};

PlaneRun check_plane(const char* name, const Vec<2>& drift, double reference_fpe, double reference_bias) {
  Timer timer;
  PlaneRun run{solve_fpe_2d(plane_fpe(drift)), {}};
  const double fpe = grid_survival(run.fpe.grid);
  const double fpe_seconds = timer.seconds();
  run.mc = run_ensemble_nd(plane_mc(drift, ReflectionRule::conormal));
  const double target = fpe - reference_bias;
  const double z = (run.mc.survival() - target) / run.mc.standard_error();
  const bool ok = std::abs(fpe - reference_fpe) <= 2e-3 && std::abs(z) <= 3.0;
  report(name, ok,
         fmt("FPE=%.7f (want %.7f +- 2e-3, %.1f s); MC=%.5f +- %.5f, bias vs FPE=%.4f (want %.4f, z=%+.2f)", fpe,
             reference_fpe, fpe_seconds, run.mc.survival(), run.mc.standard_error(), fpe - run.mc.survival(), reference_bias,
             z),
         timer.seconds());
  return run;
}

double y_marginal_l1(const EnsembleResultNd<2>& mc, const GridMarginal& fpe_y) {
  const auto table = mc.marginal_density(1);
  const auto ref = average_over_bins(fpe_y, table);
  double l1 = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    l1 += std::abs(table.density[k] - ref[k]) * (table.bin_hi[k] - table.bin_lo[k]);
  }
  return l1;
}

void check_reflection_law(const PlaneRun& conormal) {
  Timer timer;
  const auto normal = run_ensemble_nd(plane_mc({0.0, 0.0}, ReflectionRule::normal));
  const auto fpe_y = grid_marginals(conormal.fpe.grid).y;
  const double l1_co = y_marginal_l1(conormal.mc, fpe_y);
  const double l1_normal = y_marginal_l1(normal, fpe_y);
  const bool same_x = normal.marginals[0] == conormal.mc.marginals[0] && normal.n_survived == conormal.mc.n_survived;
  report("reflection-law", l1_normal >= 3.0 * l1_co && same_x,
         fmt("y-marginal L1: normal=%.4f co-normal=%.4f (ratio %.1f, want >= 3); x-marginals %s", l1_normal, l1_co,
             l1_normal / l1_co, same_x ? "bitwise identical" : "DIFFER"),
         timer.seconds());
}

// --- boundary-layer verifier -------------------------------------------------

void check_verifier() {
  Timer timer;
  const double dt = 1e-4;
  const double P = std::sqrt(M_PI);
  const double c = 2.5;
  const double flux = flux_integral([c](double) { return c; }, P, 1.0, dt);
  const double kappa = P_to_kappa(P, 1.0);
  const double flux_err = std::abs(flux - kappa * c);

  GridDensity flat{std::sqrt(dt) / 20.0, {}};
  GridDensity ramp = flat;
  for (std::size_t k = 0; k <= 1000; ++k) {
    flat.values.push_back(1.0);
    ramp.values.push_back(1.0 + flat.y(k));
  }
  PropagatorInput in;
  in.model = CoefficientModel1D::constant(0.0, 1.0);
  in.dt = dt;
  in.density = flat;
  in.P = P;
  const auto absorbing = boundary_derivative_check(apply_propagator_1d(in), flat, P, 1.0, dt);
  in.density = ramp;
  in.P = 0.0;
  const auto reflecting = boundary_derivative_check(apply_propagator_1d(in), ramp, 0.0, 1.0, dt);

  const bool ok = flux_err <= 1e-8 && std::abs(absorbing.ratio - 1.0) <= 0.05 &&
                  std::abs(reflecting.measured_slope) < 1e-3 * std::abs(reflecting.interior_slope);
  report("boundary-layer-verifier", ok,
         fmt("flux error=%.1e; slope measured=%.4f predicted=%.4f (ratio %.4f); reflecting slope=%.1e vs interior %.4f",
             flux_err, absorbing.measured_slope, absorbing.predicted_slope, absorbing.ratio,
             reflecting.measured_slope, reflecting.interior_slope),
         timer.seconds());
}

// --- determinism -------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_determinism() {
  Timer timer;
  const char* configs[] = {R"(experiment = determinism-1d
engine = sim1d
sigma = constant 1
drift = constant -1
kappa = 1
x0 = 1
T = 1
dt = 0.1 0.01
n = 200000
)",
                           R"(experiment = determinism-2d
engine = simnd
tensor = 0.25 0.4 0.4 1
kappa = 1
x0 = 0.3 0
T = 0.5
dt = 0.01
n = 100000
)"};
  const auto root = fs::temp_directory_path() / "robinsim_acceptance_determinism";
  fs::remove_all(root);
  std::size_t files = 0, differing = 0;
  int index = 0;
  for (const char* text : configs) {
    std::vector<std::vector<fs::path>> outputs;
    for (unsigned workers : {1u, 3u, 8u}) {
      auto c = parse_config(text);
      c.set_workers(workers);
      c.set_out((root / (std::to_string(index) + "_w" + std::to_string(workers))).string());
      outputs.push_back(run_experiment(c));
    }
    for (std::size_t f = 0; f < outputs[0].size(); ++f) {
      ++files;
      const auto ref = slurp(outputs[0][f]);
      for (std::size_t w = 1; w < outputs.size(); ++w) {
        if (slurp(outputs[w][f]) != ref) ++differing;
      }
    }
    ++index;
  }
  fs::remove_all(root);
  report("determinism", files > 0 && differing == 0,
         fmt("%zu CSV files compared across 1, 3 and 8 workers, %zu differ", files, differing), timer.seconds());
}

}  // namespace

int main() {
  try {
    Timer timer;
    const auto rows = halfline_biases();
    check_halfline(rows, timer.seconds());
    check_ratios(rows);
    check_identities();
    check_reflecting();
    const auto exp1 = check_plane("plane-cross-oracle-1", {0.0, 0.0}, 0.6799545, 0.0094);
    check_plane("plane-cross-oracle-3", {-1.0, 0.0}, 0.3722893, 0.0090);
    check_reflection_law(exp1);
    check_verifier();
    check_determinism();
  } catch (const std::exception& e) {
    std::printf("FAIL %-24s %s\n", "unexpected-error", e.what());
    return 1;
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
