#include <cmath>

#include "blowup/checks.hpp"
#include "blowup/physical.hpp"
#include "doctest.h"

using namespace blowup;

namespace {
const ModelParams P2 = make_params(2, 0, 0, 0, 0, 0);
}

TEST_CASE("config validation") {
  PhysicalConfig c;
  c.grid = physical_grid(20);
  CHECK_NOTHROW(validate(c));
  PhysicalConfig bad = c;
  bad.dt0 = 0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = c;
  bad.grid.half_count = 999;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("homogeneous data follows the ODE") {
  const OdeOracleReport r = homogeneous_oracle(2.0, 1.0);
  CHECK(r.T_exact == 1.0);
  CHECK(r.T_rel_err <= 1e-4);
  CHECK(r.path_rel_err <= 1e-6);
  const OdeOracleReport r3 = homogeneous_oracle(3.0, 2.0);
  CHECK(r3.T_exact == doctest::Approx(0.125));
  CHECK(r3.T_rel_err <= 1e-4);
}

TEST_CASE("initial data matches the self-similar transform") {
  const double s0 = 20, T = std::exp(-s0);
  const Grid xg = physical_grid(s0);
  const Field u0 = initial_u({0.01, 0.002, s0}, P2, xg);
  const Grid yg = make_grid(30, 0.05);
  const Field w = to_selfsim(u0, T, 0.0, P2, yg);
  const Field q = initial_q({0.01, 0.002, s0}, P2, yg);
  for (std::size_t i = 0; i < yg.size(); ++i) {
    const double want = q[i] + phi(P2, yg.node(i), s0);
    CHECK(w[i] == doctest::Approx(want).epsilon(1e-8).scale(1.0));
  }
  CHECK_THROWS_AS(to_selfsim(u0, T, 0.0, P2, make_grid(1e6, 100)), GridError);
}

TEST_CASE("perturbation shape") {
  const Grid g{0.0, 0.01, 100};
  const Field u = sample(g, [](double x) { return 2 - x * x; });
  const Field p = perturb(u, {0.1, 0.2, 0.3});
  CHECK(p[g.half_count] - u[g.half_count] == doctest::Approx(0.1 * 2 * std::exp(-4.0 / 9)));
  CHECK(p[g.half_count + 20] - u[g.half_count + 20] == doctest::Approx(0.2));
}

TEST_CASE("monotone shrink test") {
  CHECK(shrinks_with_eps({{1e-2, 3}, {1e-3, 2}, {1e-4, 1}}, 0));
  CHECK(shrinks_with_eps({{1e-4, 1}, {1e-2, 3}, {1e-3, 2}}, 0));
  CHECK_FALSE(shrinks_with_eps({{1e-2, 3}, {1e-3, 4}, {1e-4, 1}}, 0));
  CHECK(shrinks_with_eps({{1e-2, 1e-13}, {1e-3, 5e-13}, {1e-4, 0}}, 1e-12));
}

TEST_CASE("trapped data blows up at T = e^{-s0} with the profile") {
  const double s0 = 20, T = std::exp(-s0);
  PhysicalConfig c;
  c.grid = physical_grid(s0);
  const Field u0 = initial_u({0.012083016988944146, 0, s0}, P2, c.grid);
  const PhysicalRun run = integrate_u(u0, P2, c);
  REQUIRE(run.est.blew_up);
  CHECK(std::abs(run.est.T_est / T - 1) <= 1e-3);
  CHECK(std::abs(run.est.a_est) <= 2 * run.est.dx_final);
  CHECK(run.zooms > 0);
  const ProfileErrorCurve pe = profile_error(run, P2);
  CHECK(pe.rows.size() >= 5);
  CHECK(std::abs(pe.final_center_ratio - 1) <= 0.1);
  CHECK(pe.trend <= 0.1);
  for (const auto& r : pe.rows) CHECK(r.e_inf <= r.e);
}

TEST_CASE("small data does not blow up within the budget") {
  PhysicalConfig c;
  c.grid = Grid{0.0, 0.1, 100};
  c.t_budget = 0.5;
  c.zoom = false;
  c.boundary = PhysicalBoundary::Neumann;
  const Field u0 = sample(c.grid, [](double x) { return 0.1 * std::exp(-x * x); });
  const PhysicalRun run = integrate_u(u0, P2, c);
  CHECK_FALSE(run.est.blew_up);
  CHECK(std::isnan(run.est.T_est));
  CHECK(run.rows.back().t == doctest::Approx(0.5));
}
