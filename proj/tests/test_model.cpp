#include <cmath>
#include <limits>

#include "blowup/model.hpp"
#include "doctest.h"

using namespace blowup;

namespace {
const ModelParams P2 = make_params(2, 0, 0, 0, 0, 0);
constexpr double kEps = std::numeric_limits<double>::epsilon();
}  // namespace

TEST_CASE("derived constants by substitution") {
  const ModelParams a = make_params(2, 1, 1, 0, 0, 0);
  CHECK(a.beta == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a.beta_bar == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.beta0 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a.kappa == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.p_bar == 2.0);

  const ModelParams b = make_params(3, 0, 0, 0, 0, 0);
  CHECK(b.beta == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(b.beta_bar == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(b.kappa == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(b.kappa == doctest::Approx(profile_f(b, 0.0)).epsilon(1e-15));
}

TEST_CASE("parameter validation distinguishes the failure") {
  auto kind_of = [](double p, double al, double ab) {
    try {
      make_params(p, al, ab, 0, 0, 0);
    } catch (const ParameterError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  CHECK(kind_of(2, 4.0 / 3.0, 0) == static_cast<int>(ParameterErrorKind::SupercriticalAlpha));
  CHECK(kind_of(2, 0, 2) == static_cast<int>(ParameterErrorKind::SupercriticalAlphaBar));
  CHECK(kind_of(1, 0, 0) == static_cast<int>(ParameterErrorKind::InvalidExponent));
  CHECK(kind_of(0.5, 0, 0) == static_cast<int>(ParameterErrorKind::InvalidExponent));
  CHECK(kind_of(2, 1.3, 1.9) == -1);
  try {
    make_params(2, 4.0 / 3.0, 0, 0, 0, 0);
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("supercritical alpha") != std::string::npos);
  }
}

TEST_CASE("admissible parameters give positive exponents") {
  for (double p : {1.2, 2.0, 3.5, 7.0}) {
    const double a_max = 2 * p / (p + 1);
    for (double f : {0.0, 0.5, 0.99}) {
      const ModelParams m = make_params(p, f * a_max, f * p, 1, 1, 1);
      CHECK(m.beta > 0);
      CHECK(m.beta_bar > 0);
      CHECK(m.beta0 > 0);
    }
  }
}

TEST_CASE("profile values") {
  CHECK(profile_f(P2, 0.0) == 1.0);
  CHECK(profile_f(P2, 2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(profile_f(make_params(3, 0, 0, 0, 0, 0), 0.0) == doctest::Approx(0.7071067811865476).epsilon(1e-15));
  double prev = profile_f(P2, 0.0);
  for (double z = 0.25; z < 30; z += 0.25) {
    const double v = profile_f(P2, z);
    CHECK(v > 0);
    CHECK(v < prev);
    CHECK(v == profile_f(P2, -z));
    prev = v;
  }
}

TEST_CASE("profile identity holds to rounding") {
  for (double p : {1.5, 2.0, 3.0, 5.0}) {
    const ModelParams m = make_params(p, 0, 0, 0, 0, 0);
    for (double z : {0.0, 1.7, -3.0, 10.0}) {
      const double scale = std::pow(profile_f(m, z), p);
      CHECK(std::abs(profile_residual(m, z)) <= 10 * kEps * scale * 4);
    }
  }
}

TEST_CASE("profile derivative against a finite difference") {
  const ModelParams m = make_params(3, 0, 0, 0, 0, 0);
  for (double z : {-2.0, 0.3, 4.0}) {
    const double h = 1e-5;
    const double fd = (profile_f(m, z + h) - profile_f(m, z - h)) / (2 * h);
    CHECK(profile_fprime(m, z) == doctest::Approx(fd).epsilon(1e-8));
    const double fd2 = (profile_fprime(m, z + h) - profile_fprime(m, z - h)) / (2 * h);
    CHECK(profile_fsecond(m, z) == doctest::Approx(fd2).epsilon(1e-7));
  }
}

TEST_CASE("phi and V by substitution") {
  CHECK(phi(P2, 0, 10) == doctest::Approx(1.025).epsilon(1e-15));
  const ModelParams p3 = make_params(3, 0, 0, 0, 0, 0);
  CHECK(phi(p3, 0, 50) == doctest::Approx(std::sqrt(0.5) * (1 + 1.0 / 300)).epsilon(1e-14));
  CHECK(potential_V(P2, 0, 10) == doctest::Approx(0.05).epsilon(1e-12));
  // z = 6 is not yet far out: V + 2 = 2 (f(6) + 1/400) = 2 (1/5.5 + 1/400)
  CHECK(potential_V(P2, 60, 100) + 2.0 == doctest::Approx(2 * (1 / 5.5 + 1 / 400.0)).epsilon(1e-13));
  CHECK(std::abs(potential_V(P2, 110, 100) + 2.0) <= 0.15);
  // phi tends to kappa pointwise
  CHECK(std::abs(phi(P2, 3.0, 1e8) - 1.0) < 1e-6);
}

TEST_CASE("V decays in L2_rho along s") {
  auto norm = [](double s) {
    double acc = 0;
    const double dy = 0.01;
    for (double y = -40; y <= 40; y += dy) {
      const double v = potential_V(P2, y, s);
      acc += v * v * std::exp(-y * y / 4) / std::sqrt(4 * M_PI) * dy;
    }
    return std::sqrt(acc);
  };
  const double n10 = norm(10), n40 = norm(40), n160 = norm(160);
  CHECK(n40 < n10);
  CHECK(n160 < n40);
  // outside |y| >= C sqrt(s) V is close to -p/(p-1)
  const double eps = 0.15, C = 11.0, s = 100.0;
  for (double y = C * std::sqrt(s); y < 400; y += 1.0) CHECK(std::abs(potential_V(P2, y, s) + 2) <= eps);
}

TEST_CASE("nonlinear B") {
  CHECK(nonlinear_B(P2, 1.0, 0.1) == doctest::Approx(0.01).epsilon(1e-12));
  for (double p : {1.5, 2.0, 4.0}) {
    const ModelParams m = make_params(p, 0, 0, 0, 0, 0);
    CHECK(nonlinear_B(m, 0.7, 0.0) == 0.0);
  }
  // quadratic envelope at p = 2: |B| / q^2 is bounded (B = q^2 exactly for phi + q > 0)
  double worst = 0;
  for (double ph = 0.5; ph <= 2.0; ph += 0.1) {
    for (double q = -0.5; q <= 0.5; q += 0.01) {
      if (std::abs(q) < 1e-12) continue;
      worst = std::max(worst, std::abs(nonlinear_B(P2, ph, q)) / (q * q));
    }
  }
  CHECK(worst <= 1.0 + 1e-9);
  // 1 < p < 2: |q|^p envelope
  const ModelParams m = make_params(1.5, 0, 0, 0, 0, 0);
  double ratio_small = 0;
  for (double q = 1e-4; q <= 0.5; q *= 1.5) {
    ratio_small = std::max(ratio_small, std::abs(nonlinear_B(m, 1.0, q)) / std::pow(q, 1.5));
  }
  CHECK(ratio_small < 1.0);
}

TEST_CASE("remainder R is even and decays like 1/s") {
  for (double y : {0.5, 3.0, 12.0}) CHECK(remainder_R(P2, y, 20) == remainder_R(P2, -y, 20));
  auto sup = [](double s) {
    double m = 0;
    for (double z = -40; z <= 40; z += 0.01) m = std::max(m, std::abs(remainder_R(P2, z * std::sqrt(s), s)));
    return m;
  };
  const double r20 = sup(20), r160 = sup(160);
  CHECK(std::isfinite(r20));
  const double slope = std::log(r160 / r20) / std::log(8.0);
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("remainder R matches its defining expression") {
  // Independent evaluation from phi and finite differences in y and s.
  const ModelParams m = make_params(3, 0, 0, 0, 0, 0);
  const double s = 15.0, hy = 1e-3, hs = 1e-4;
  for (double y : {0.0, 1.0, 5.0}) {
    const double ph = phi(m, y, s);
    const double pyy = (phi(m, y + hy, s) - 2 * ph + phi(m, y - hy, s)) / (hy * hy);
    const double py = (phi(m, y + hy, s) - phi(m, y - hy, s)) / (2 * hy);
    const double ps = (phi(m, y, s + hs) - phi(m, y, s - hs)) / (2 * hs);
    const double want = pyy - 0.5 * y * py - ph / 2.0 + std::pow(ph, 3) - ps;
    CHECK(remainder_R(m, y, s) == doctest::Approx(want).epsilon(1e-5).scale(1e-3));
  }
}

TEST_CASE("perturbation N") {
  CHECK(perturbation_N(P2, 1.0, 0.2, 0.1, 0.3, 20) == 0.0);
  const ModelParams g = make_params(2, 1, 0, 1, 0, 0);
  CHECK(perturbation_N(g, 1.0, 0.1, 0.0, 0.2, 20) == doctest::Approx(0.3 * std::exp(-10.0)).epsilon(1e-14));
  const ModelParams all = make_params(2, 1, 1, 1, 1, 1);
  const ForcingWeights w = forcing_weights(all, 20);
  CHECK(perturbation_N(all, w, 1.2, -0.3) ==
        doctest::Approx(perturbation_N(all, 1.0, -0.1, 0.2, -0.2, 20)).epsilon(1e-14));
  // below 1/s^4 at the sizes seen on trapped runs (|q|, |grad q| <= 0.05)
  for (double s = 20; s <= 60; s += 5) {
    const double n = perturbation_N(all, 1.05, 0.05, 0.0, 0.0, s);
    CHECK(n <= 1 / std::pow(s, 4));
  }
}
