#include <cmath>
#include <random>

#include "blowup/trapset.hpp"
#include "doctest.h"

using namespace blowup;

namespace {

ModeSummary summary(double s, double q0, double q1, double q2, double minus, double qe) {
  ModeSummary m;
  m.s = s;
  m.modes = {q0, q1, q2};
  m.minus_seminorm = minus;
  m.qe_sup = qe;
  return m;
}

StepRecord row(double s, double q0, double q1) {
  StepRecord r;
  r.s = s;
  r.modes = {q0, q1, 0.0};
  return r;
}

}  // namespace

TEST_CASE("trap bounds") {
  const TrapParams t = make_trap(8, 4);
  const auto b = trap_bounds(t, 20);
  CHECK(b[0] == doctest::Approx(8.0 / 400));
  CHECK(b[1] == doctest::Approx(8.0 / 400));
  CHECK(b[2] == doctest::Approx(64 * std::log(20.0) / 400));
  CHECK(b[3] == doctest::Approx(8.0 / 400));
  CHECK(b[4] == doctest::Approx(64 / std::sqrt(20.0)));
  CHECK_THROWS(make_trap(0.5, 4));
  CHECK_THROWS(make_trap(8, 0));
}

TEST_CASE("membership margins") {
  const TrapParams t = make_trap(8, 4);
  const double s = 20;
  const auto b = trap_bounds(t, s);
  const TrapStatus zero = check_membership(summary(s, 0, 0, 0, 0, 0), s, t);
  CHECK(zero.inside);
  for (int i = 0; i < 5; ++i) CHECK(zero.margins[i] == b[i]);

  const TrapStatus out = check_membership(summary(s, 2 * t.A / (s * s), 0, 0, 0, 0), s, t);
  CHECK_FALSE(out.inside);
  REQUIRE(out.violated.has_value());
  CHECK(*out.violated == Component::Q0);
  CHECK(out.margins[0] == doctest::Approx(-t.A / (s * s)));

  // most negative margin wins, ties to the lowest index
  const TrapStatus two = check_membership(summary(s, 1.5 * b[0], -3 * b[1], 0, 0, 0), s, t);
  CHECK(*two.violated == Component::Q1);
  const TrapStatus tie = check_membership(summary(s, 2 * b[0], 0, 0, b[3] + b[0], 0), s, t);
  CHECK(*tie.violated == Component::Q0);
  const TrapStatus qe = check_membership(summary(s, 0, 0, 0, 0, 2 * b[4]), s, t);
  CHECK(*qe.violated == Component::QE);
}

TEST_CASE("membership is monotone in A and affine in the components") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const double s = 30;
  for (int k = 0; k < 200; ++k) {
    const ModeSummary m = summary(s, u(gen) * 0.02, u(gen) * 0.02, u(gen) * 0.5, std::abs(u(gen)) * 0.02,
                                  std::abs(u(gen)) * 20);
    const TrapParams t = make_trap(4, 4), big = make_trap(9, 4);
    if (check_membership(m, s, t).inside) CHECK(check_membership(m, s, big).inside);
    const TrapStatus a = check_membership(m, s, t);
    ModeSummary twice = m;
    twice.modes[0] *= 2;
    const TrapStatus b = check_membership(twice, s, t);
    const double bound0 = trap_bounds(t, s)[0];
    CHECK(b.margins[0] - bound0 == doctest::Approx(2 * (a.margins[0] - bound0)));
  }
}

TEST_CASE("derived bounds on boundary cases") {
  const TrapParams t = make_trap(8, 4);
  const double s = 20;
  const auto b = trap_bounds(t, s);
  const Grid g = default_grid(4, 50);
  auto base = [&] {
    SpectralDecomp d;
    d.K0 = 4;
    d.s = s;
    d.q_minus = Field(g, s);
    d.q_e = Field(g, s);
    return d;
  };
  const SpectralDecomp zero = base();
  const DerivedBoundsReport z = check_derived_bounds(zero, s, t);
  CHECK(z.C_blowup_region == 0);
  CHECK(z.C_sup == 0);
  std::vector<SpectralDecomp> cases;
  for (int c = 0; c < 5; ++c) {
    SpectralDecomp d = base();
    if (c == 0) d.q0 = b[0];
    if (c == 1) d.q1 = b[1];
    if (c == 2) d.q2 = b[2];
    const double outer = 2 * 4 * std::sqrt(s);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = std::abs(g.node(i));
      if (c == 3 && y <= outer) d.q_minus[i] = b[3] * (1 + y * y * y);
      if (c == 4 && y > 4 * std::sqrt(s)) d.q_e[i] = b[4];
    }
    const DerivedBoundsReport r = check_derived_bounds(d, s, t);
    CHECK(r.C_blowup_region <= 4);
  }
}

TEST_CASE("exit classification") {
  const TrapParams t = make_trap(8, 4);
  TrajectoryRecord rec;
  rec.ds = 0.01;
  for (int k = 0; k <= 4; ++k) {
    const double s = 20 + 0.01 * k;
    rec.steps.push_back(row(s, 0.004 * k + 0.005, 0.0));
  }
  // last row: q0 = 0.021 > 8/400 = 0.02 (with s ~ 20.04 the bound is slightly lower)
  const ExitInfo e = exit_classify(rec, t);
  CHECK(e.reason == ExitReason::Trap);
  CHECK(*e.violated == Component::Q0);
  CHECK(e.mode == 0);
  CHECK(e.omega == 1);
  CHECK(e.dq_ds == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(e.transverse);

  TrajectoryRecord neg = rec;
  for (auto& r : neg.steps) r.modes[0] = -r.modes[0];
  const ExitInfo en = exit_classify(neg, t);
  CHECK(en.omega == -1);
  CHECK(en.transverse);

  TrajectoryRecord outer = rec;
  for (auto& r : outer.steps) r.modes[0] = 0;
  outer.steps.back().qe_sup = 100;
  const ExitInfo eo = exit_classify(outer, t);
  CHECK(*eo.violated == Component::QE);
  CHECK_FALSE(eo.expanding());

  TrajectoryRecord inside = rec;
  inside.steps.back().modes[0] = 0;
  CHECK_THROWS_AS(exit_classify(inside, t), NoViolationError);
}

TEST_CASE("reduction witness counts") {
  std::vector<ExitInfo> batch(4);
  batch[0].reason = ExitReason::Trap;
  batch[0].violated = Component::Q0;
  batch[0].mode = 0;
  batch[0].transverse = true;
  batch[1] = batch[0];
  batch[1].violated = Component::Q1;
  batch[1].mode = 1;
  batch[2].reason = ExitReason::Trap;
  batch[2].violated = Component::Q2;
  const ReductionReport r = reduction_witness(batch);
  CHECK(r.runs == 4);
  CHECK(r.exits == 3);
  CHECK(r.survivors == 1);
  CHECK(r.expanding_exits == 2);
  CHECK(r.expanding_fraction == doctest::Approx(2.0 / 3));
  CHECK(r.transverse_fraction == 1.0);
  CHECK(r.by_component[2] == 1);
}
