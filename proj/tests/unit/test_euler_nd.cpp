#include <robinsim/euler_nd.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace robinsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Mat<2> aniso{{{0.25, 0.4}, {0.4, 1.0}}};

SimConfigNd<2> aniso_config(ReflectionRule rule, std::uint64_t n) {
  SimConfigNd<2> c;
  c.model = HalfSpaceModel<2>(aniso);
  c.boundary.P = kappa_to_P_nd(1.0, 0.25);
  c.boundary.rule = rule;
  c.x0 = {0.3, 0.0};
  c.T = 0.5;
  c.dt = 0.01;
  c.n = n;
  return c;
}

}  // namespace

TEST_CASE("co-normal direction of the anisotropic tensor", "[euler_nd]") {
  const auto v = conormal_direction(aniso);
  CHECK_THAT(v[0], WithinAbs(0.52999, 1e-5));
  CHECK_THAT(v[1], WithinAbs(0.84799, 1e-5));
  CHECK_THAT(v[0] * v[0] + v[1] * v[1], WithinAbs(1.0, 1e-15));
  CHECK(conormal_direction(identity_matrix<3>()) == Vec<3>{1.0, 0.0, 0.0});
}

TEST_CASE("oblique reflection", "[euler_nd]") {
  const auto v = conormal_direction(aniso);
  const auto r = reflect_oblique(Vec<2>{-0.1, 0.0}, v);
  CHECK(r[0] == 0.1);
  CHECK_THAT(r[1], WithinAbs(0.32, 1e-12));
  const auto n = reflect_oblique(Vec<2>{-0.1, 0.7}, Vec<2>{1.0, 0.0});
  CHECK(n == Vec<2>{0.1, 0.7});
  CHECK_THROWS_AS(reflect_oblique(Vec<2>{-0.1, 0.0}, Vec<2>{0.0, 1.0}), ConfigError);
}

TEST_CASE("P from kappa uses the normal diffusion", "[euler_nd]") {
  CHECK_THAT(kappa_to_P_nd(1.0, 0.25), WithinRel(2.0 * std::sqrt(M_PI), 1e-15));
  CHECK_THAT(kappa_to_P_nd(1.0, 1.0), WithinRel(std::sqrt(M_PI), 1e-15));
  CHECK(HalfSpaceModel<2>(aniso).sigma_n() == 0.25);
}

TEST_CASE("custom directions are validated", "[euler_nd]") {
  BoundarySpecNd<2> b;
  b.rule = ReflectionRule::custom;
  const HalfSpaceModel<2> model(aniso);
  b.custom_direction = {0.6, 0.8};
  CHECK(b.direction(model) == Vec<2>{0.6, 0.8});
  b.custom_direction = {0.6, 0.7};
  CHECK_THROWS_AS(b.direction(model), ConfigError);
  b.custom_direction = {-0.6, 0.8};
  CHECK_THROWS_AS(b.direction(model), ConfigError);
}

TEST_CASE("single step draws a uniform only on a crossing", "[euler_nd]") {
  const HalfSpaceModel<2> model(identity_matrix<2>());
  BoundarySpecNd<2> b;
  b.P = std::sqrt(M_PI);
  int calls = 0;
  auto u = [&calls] {
    ++calls;
    return 0.5;
  };
  const auto inside = step_nd(Vec<2>{1.0, 0.0}, 0.0, 0.01, model, b, Vec<2>{0.1, 0.2}, u);
  REQUIRE(inside);
  CHECK(calls == 0);
  const auto crossed = step_nd(Vec<2>{0.01, 0.0}, 0.0, 0.01, model, b, Vec<2>{-2.0, 1.0}, u);
  REQUIRE(crossed);
  CHECK(calls == 1);
  CHECK_THAT((*crossed)[0], WithinAbs(2.0 * std::sqrt(0.02) - 0.01, 1e-15));
  CHECK_THAT((*crossed)[1], WithinAbs(std::sqrt(0.02), 1e-15));
}

TEST_CASE("spatially varying P is evaluated at the boundary projection", "[euler_nd]") {
  const HalfSpaceModel<2> model(identity_matrix<2>());
  BoundarySpecNd<2> b;
  Vec<2> seen{-1.0, -1.0};
  b.P_field = [&seen](const Vec<2>& y) {
    seen = y;
    return 5.0;
  };
  auto u = [] { return 0.4; };  // below 5 sqrt(0.01) = 0.5: absorbed
  CHECK_FALSE(step_nd(Vec<2>{0.01, 0.3}, 0.0, 0.01, model, b, Vec<2>{-2.0, 0.0}, u));
  CHECK(seen == Vec<2>{0.0, 0.3});
  b.P_field = [](const Vec<2>&) { return 50.0; };
  CHECK_THROWS_AS(step_nd(Vec<2>{0.01, 0.3}, 0.0, 0.01, model, b, Vec<2>{-2.0, 0.0}, u), DomainError);
}

TEST_CASE("P sqrt(dt) above 1 is rejected before simulating", "[euler_nd]") {
  auto c = aniso_config(ReflectionRule::conormal, 10);
  c.dt = 0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("ensemble accounting", "[euler_nd][property]") {
  const auto r = run_ensemble_nd(aniso_config(ReflectionRule::conormal, 20000));
  CHECK(r.n_total == 20000);
  CHECK(r.n_survived + r.n_terminated() == r.n_total);
  CHECK(r.marginals[0].total() == r.n_survived);
  CHECK(r.marginals[1].total() == r.n_survived);
  CHECK(r.joint.total() == r.n_survived);
  CHECK(r.marginals[0].underflow() == 0);
}

TEST_CASE("normal and co-normal rules share the normal coordinate", "[euler_nd][property]") {
  const auto co = run_ensemble_nd(aniso_config(ReflectionRule::conormal, 20000));
  const auto no = run_ensemble_nd(aniso_config(ReflectionRule::normal, 20000));
  CHECK(co.n_survived == no.n_survived);
  CHECK(co.marginals[0] == no.marginals[0]);
  CHECK_FALSE(co.marginals[1] == no.marginals[1]);
}

TEST_CASE("nd results do not depend on the worker count", "[euler_nd][determinism]") {
  auto c = aniso_config(ReflectionRule::conormal, 15000);
  c.workers = 1;
  const auto one = run_ensemble_nd(c);
  c.workers = 4;
  const auto four = run_ensemble_nd(c);
  CHECK(one == four);
}

TEST_CASE("three-dimensional ensemble runs", "[euler_nd]") {
  SimConfigNd<3> c;
  c.model = HalfSpaceModel<3>(Mat<3>{{{1.0, 0.2, 0.1}, {0.2, 1.0, 0.0}, {0.1, 0.0, 0.5}}});
  c.boundary.P = 1.0;
  c.x0 = {0.5, 0.0, 0.0};
  c.T = 0.2;
  c.dt = 0.01;
  c.n = 5000;
  const auto r = run_ensemble_nd(c);
  CHECK(r.n_survived > 0);
  CHECK(r.n_survived < r.n_total);
  CHECK(r.marginals[2].total() == r.n_survived);
}
