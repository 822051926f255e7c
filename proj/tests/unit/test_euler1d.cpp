#include <robinsim/analytic1d.hpp>
#include <robinsim/euler1d.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace robinsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct CountingUniform {
  double value;
  int* calls;
  double operator()() const {
    ++*calls;
    return value;
  }
};

}  // namespace

TEST_CASE("kappa and P conversions", "[euler1d]") {
  CHECK_THAT(kappa_to_P(1.0, 1.0), WithinRel(std::sqrt(M_PI), 1e-15));
  CHECK_THAT(P_to_kappa(kappa_to_P(0.37, 2.5), 2.5), WithinRel(0.37, 1e-15));
  CHECK_THROWS_AS(kappa_to_P(1.0, 0.0), DomainError);
}

TEST_CASE("single steps", "[euler1d]") {
  const auto model = CoefficientModel1D::constant(0.0, 1.0);
  const Boundary1D boundary{std::sqrt(M_PI)};
  int calls = 0;

  // Interior step: no uniform drawn.
  const auto inside = step_1d(1.0, 0.0, 0.01, model, boundary, 0.5, CountingUniform{0.0, &calls});
  REQUIRE(inside);
  CHECK_THAT(*inside, WithinAbs(1.0 + std::sqrt(0.02) * 0.5, 1e-15));
  CHECK(calls == 0);

  // Crossing with u above P sqrt(dt) = 0.1772: mirrored.
  const auto mirrored = step_1d(0.01, 0.0, 0.01, model, boundary, -2.0, CountingUniform{0.5, &calls});
  REQUIRE(mirrored);
  CHECK_THAT(*mirrored, WithinAbs(2.0 * std::sqrt(0.02) - 0.01, 1e-15));
  CHECK_THAT(*mirrored, WithinAbs(0.27284, 1e-5));
  CHECK(calls == 1);

  // Crossing with u below P sqrt(dt): terminated.
  CHECK_FALSE(step_1d(0.01, 0.0, 0.01, model, boundary, -2.0, CountingUniform{0.1, &calls}));

  // Landing exactly on 0 counts as inside.
  const auto zero = step_1d(std::sqrt(0.02), 0.0, 0.01, model, boundary, -1.0, CountingUniform{0.0, &calls});
  REQUIRE(zero);
  CHECK(*zero == 0.0);
  CHECK(calls == 2);
}

TEST_CASE("configuration checks", "[euler1d]") {
  SimConfig1D c;
  c.boundary.P = 20.0;
  c.dt = 0.01;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.boundary.P = 10.0;
  CHECK_NOTHROW(c.validate());
  c.T = 1.005;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.T = 1.0;
  c.x0 = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(step_count(1.0, 0.001) == 1000);
  CHECK(step_count(1.0, 0.1) == 10);
}

TEST_CASE("P = 0 never terminates", "[euler1d][property]") {
  SimConfig1D c;
  c.model = CoefficientModel1D::constant(-1.0, 1.0);
  c.boundary.P = 0.0;
  c.dt = 0.01;
  c.n = 20000;
  const auto r = run_ensemble_1d(c);
  CHECK(r.n_total == 20000);
  CHECK(r.n_survived == 20000);
}

TEST_CASE("mass accounting", "[euler1d][property]") {
  SimConfig1D c;
  c.boundary.P = std::sqrt(M_PI);
  c.n = 30000;
  const auto r = run_ensemble_1d(c);
  CHECK(r.n_survived + r.n_terminated() == r.n_total);
  CHECK(r.histogram.total() == r.n_survived);
  CHECK(r.histogram.underflow() == 0);
  const auto d = empirical_density(r);
  double mass = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) mass += d.density[k] * (d.bin_hi[k] - d.bin_lo[k]);
  CHECK_THAT(mass, WithinAbs(static_cast<double>(r.histogram.in_range()) / r.n_total, 1e-12));
}

TEST_CASE("results do not depend on the worker count", "[euler1d][determinism]") {
  SimConfig1D c;
  c.boundary.P = std::sqrt(M_PI);
  c.n = 20000;
  c.workers = 1;
  const auto one = run_ensemble_1d(c);
  c.workers = 3;
  const auto three = run_ensemble_1d(c);
  c.workers = 8;
  const auto eight = run_ensemble_1d(c);
  CHECK(one == three);
  CHECK(one == eight);
  c.seed = default_seed + 1;
  CHECK_FALSE(run_ensemble_1d(c) == one);
}

TEST_CASE("constant-coefficient fast path matches the general step", "[euler1d]") {
  // A linear field with zero slope takes the general path but is the same dynamics.
  SimConfig1D fast;
  fast.boundary.P = std::sqrt(M_PI);
  fast.n = 5000;
  SimConfig1D general = fast;
  general.model = CoefficientModel1D(ScalarField::linear(0.0, 0.0), ScalarField::linear(0.0, 1.0));
  general.histogram = fast.default_histogram();
  CHECK(run_ensemble_1d(fast) == run_ensemble_1d(general));
}

TEST_CASE("survival bias is positive and shrinks with dt", "[euler1d][statistical]") {
  const double exact = survival_analytic(1.0, RobinParams1D{1.0, 0.0, 1.0, 1.0});
  SimConfig1D c;
  c.boundary.P = std::sqrt(M_PI);
  c.n = 200000;
  c.dt = 0.1;
  const auto coarse = run_ensemble_1d(c);
  c.dt = 0.01;
  const auto fine = run_ensemble_1d(c);
  const double bias_coarse = exact - coarse.survival();
  const double bias_fine = exact - fine.survival();
  // Expected biases are about 0.046 and 0.013.
  CHECK(bias_coarse > 0.03);
  CHECK(bias_coarse < 0.06);
  CHECK(bias_fine > 0.013 - 5.0 * fine.standard_error());
  CHECK(bias_fine < 0.013 + 5.0 * fine.standard_error());
}
