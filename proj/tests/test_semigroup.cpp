#include <cmath>
#include <numbers>

#include "blowup/checks.hpp"
#include "blowup/semigroup.hpp"
#include "doctest.h"

using namespace blowup;

TEST_CASE("kernel is positive and concentrates for small theta") {
  for (double th : {0.01, 0.5, 3.0})
    for (double y : {-10.0, 0.0, 4.0})
      for (double dx : {-0.5, 0.0, 0.1, 0.5}) CHECK(kernel_eval(th, y, y * std::exp(-th / 2) + dx) > 0);
  for (double th : {1e-4, 1e-6}) {
    const double want = std::exp(th) / std::sqrt(4 * std::numbers::pi * th);
    CHECK(kernel_eval(th, 0, 0) == doctest::Approx(want).epsilon(1e-3));
  }
}

TEST_CASE("kernel mass is e^theta") {
  const Grid g = make_grid(20, 0.05);
  const Field one = sample(g, [](double) { return 1.0; });
  for (double th : {0.1, 1.0, 4.0}) {
    const Field out = apply_semigroup(th, one);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(out[i] / std::exp(th) - 1) <= 1e-8);
  }
}

TEST_CASE("eigen-action and identity") {
  const Grid g = make_grid(20, 0.05);
  for (int m = 0; m <= 4; ++m)
    for (double th : {0.25, 0.5, 1.0, 2.0}) CHECK(eigen_action_error(m, th, g) <= 1e-6);
  const Field h2 = sample(g, [](double y) { return hermite_h(2, y); });
  const Field out = apply_semigroup(0.7, h2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.node(i)) < 8) CHECK(out[i] == doctest::Approx(h2[i]).epsilon(1e-6).scale(1.0));
  }
  const Field zero(g, 0.0);
  CHECK(sup_norm(apply_semigroup(1.0, zero)) == 0);
  const Field same = apply_semigroup(0.0, h2);
  CHECK(same.values == h2.values);
}

TEST_CASE("semigroup composition") {
  const Grid g = make_grid(20, 0.05);
  const auto fields = random_smooth_fields(g, 10, 7);
  CHECK(composition_error(0.3, 0.9, fields, 10.0) <= 1e-6);
  CHECK(composition_error(1.0, 2.0, fields, 10.0) <= 1e-6);
}

TEST_CASE("smoothing ratios stay bounded") {
  const Grid g = make_grid(20, 0.05);
  const auto fields = random_smooth_fields(g, 10, 1);
  const Field h1 = sample(g, [](double y) { return y; });
  const Field step = sample(g, [](double y) { return std::tanh(3 * y); });
  double gmax = 0, vmax = 0;
  for (double th : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0}) {
    const SmoothingReport r = verify_smoothing(th, fields);
    gmax = std::max(gmax, r.gradient_ratio);
    vmax = std::max(vmax, r.value_ratio);
    const Field one[] = {h1};
    CHECK(std::isfinite(verify_smoothing(th, one).gradient_ratio));
    const Field st[] = {step};
    CHECK(verify_smoothing(th, st).value_ratio <= 1.01 / std::sqrt(std::numbers::pi));
  }
  CHECK(gmax <= 1.01);
  CHECK(vmax <= 1.01 / std::sqrt(std::numbers::pi));
  // large theta: ratios settle
  const double r5 = verify_smoothing(5.0, fields).value_ratio;
  const double r6 = verify_smoothing(6.0, fields).value_ratio;
  CHECK(std::abs(r6 - r5) <= 0.05 * r5);
}

TEST_CASE("kernel comparison bound") {
  const Grid g = make_grid(20, 0.05);
  const KernelComparisonReport z = kernel_comparison_check(21, 20, [&](double t) { return Field(g, t); });
  CHECK(z.sup_bound == 0);
  const double c = 0.5;
  const auto flat = [&](double t) { return sample(g, [&](double) { return c / std::pow(t, 4); }, t); };
  const double s = 22, sigma = 20;
  const KernelComparisonReport r = kernel_comparison_check(s, sigma, flat);
  CHECK(r.sup_bound <= (s - sigma) * std::exp(s - sigma) * c / std::pow(sigma, 4) * (1 + 1e-6));
  CHECK(r.sup_bound > 0);
}
