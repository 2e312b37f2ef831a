#include "blowup/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "blowup/parallel.hpp"
#include "blowup/physical.hpp"
#include "blowup/semigroup.hpp"

namespace blowup {

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 pairs");
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

Field hermite_field(const Grid& grid, int m) {
  return sample(grid, [m](double y) { return hermite_h(m, y); });
}

}  // namespace

double hermite_orthogonality_error(const Grid& grid, int m_max) {
  std::vector<Field> h;
  for (int m = 0; m <= m_max; ++m) h.push_back(hermite_field(grid, m));
  double worst = 0.0;
  for (int m = 0; m <= m_max; ++m) {
    const double norm = hermite_norm_sq(m);
    for (int n = 0; n <= m_max; ++n) {
      const double want = m == n ? norm : 0.0;
      worst = std::max(worst, std::abs(inner_rho(h[static_cast<std::size_t>(m)],
                                                 h[static_cast<std::size_t>(n)]) -
                                       want) /
                                  norm);
    }
  }
  return worst;
}

FdOrderReport fd_eigen_order(double dy, double y_max, int m_max) {
  FdOrderReport rep;
  rep.errors.assign(static_cast<std::size_t>(m_max + 1), {});
  rep.orders.assign(static_cast<std::size_t>(m_max + 1), {});
  for (int k = 0; k < 3; ++k) {
    rep.dy[static_cast<std::size_t>(k)] = dy / static_cast<double>(1 << k);
    const Grid g = make_grid(y_max, rep.dy[static_cast<std::size_t>(k)]);
    for (int m = 0; m <= m_max; ++m) {
      const Field h = hermite_field(g, m);
      Field diff = apply_L_fd(h);
      const double lam = 1.0 - 0.5 * m;
      // apply_L_fd leaves the two end nodes at zero; compare the interior only.
      diff[0] = 0.0;
      diff[diff.size() - 1] = 0.0;
      for (std::size_t i = 1; i + 1 < diff.size(); ++i) diff[i] -= lam * h[i];
      rep.errors[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = norm_rho(diff);
    }
  }
  rep.min_order = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= m_max; ++m) {
    const auto& e = rep.errors[static_cast<std::size_t>(m)];
    if (m <= 2) {
      rep.exact_error = std::max({rep.exact_error, e[0], e[1], e[2]});
      continue;
    }
    auto& o = rep.orders[static_cast<std::size_t>(m)];
    o[0] = std::log2(e[0] / e[1]);
    o[1] = std::log2(e[1] / e[2]);
    rep.min_order = std::min({rep.min_order, o[0], o[1]});
  }
  return rep;
}

double profile_identity_error(const ModelParams& params, int points, double z_max) {
  const double p = params.p;
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double z = -z_max + 2.0 * z_max * i / (points - 1);
    const ProfileValues pv = profile_values(params, z);
    const double scale = std::abs(0.5 * z * pv.fprime) + pv.f / (p - 1.0) + pv.f_p;
    worst = std::max(worst, std::abs(profile_residual(params, z)) / scale);
  }
  return worst;
}

DecayFit remainder_decay(const ModelParams& params, std::span<const double> s_list, double z_max,
                         double dz) {
  DecayFit fit;
  const auto steps = static_cast<long>(std::floor(z_max / dz));
  for (double s : s_list) {
    double sup = 0.0;
    for (long i = -steps; i <= steps; ++i) {
      const double z = static_cast<double>(i) * dz;
      sup = std::max(sup, std::abs(remainder_from(params, profile_values(params, z), z, s)));
    }
    fit.s.push_back(s);
    fit.values.push_back(sup);
  }
  fit.slope = loglog_slope(fit.s, fit.values);
  return fit;
}

double eigen_action_error(int m, double theta, const Grid& grid) {
  const Field h = hermite_field(grid, m);
  const Field out = apply_semigroup(theta, h);
  const double g = std::exp((1.0 - 0.5 * m) * theta);
  Field want = h;
  Field diff = h;
  for (std::size_t i = 0; i < h.size(); ++i) {
    want[i] = g * h[i];
    diff[i] = out[i] - want[i];
  }
  return norm_rho(diff) / norm_rho(want);
}

std::vector<Field> random_smooth_fields(const Grid& grid, int count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  // Explicit mapping so the stream does not depend on the standard library's distributions.
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(gen() >> 11) * 0x1.0p-53;
  };
  std::vector<Field> out;
  for (int k = 0; k < count; ++k) {
    std::array<double, 9> b{};
    for (std::size_t j = 0; j < 9; j += 3) {
      b[j] = uniform(-1.0, 1.0);
      b[j + 1] = uniform(-5.0, 5.0);
      b[j + 2] = uniform(0.5, 3.0);
    }
    const double step = uniform(-0.5, 0.5);
    const double step_c = uniform(-3.0, 3.0);
    out.push_back(sample(grid, [&](double y) {
      double v = step * std::tanh(y - step_c);
      for (std::size_t j = 0; j < 9; j += 3) {
        const double r = (y - b[j + 1]) / b[j + 2];
        v += b[j] * std::exp(-r * r);
      }
      return v;
    }));
  }
  return out;
}

double composition_error(double t1, double t2, std::span<const Field> fields, double y_inner) {
  double worst = 0.0;
  for (const Field& f : fields) {
    const Field two = apply_semigroup(t1, apply_semigroup(t2, f));
    const Field one = apply_semigroup(t1 + t2, f);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (std::abs(f.grid.node(i)) > y_inner) continue;
      num = std::max(num, std::abs(two[i] - one[i]));
      den = std::max(den, std::abs(one[i]));
    }
    if (den > 0.0) worst = std::max(worst, num / den);
  }
  return worst;
}

DecayRates trapped_decay(const TrajectoryRecord& record, double s_from, double s_to) {
  std::vector<double> s, q, g;
  DecayRates rep;
  rep.s_from = s_from;
  rep.s_to = s_to;
  for (const StepRecord& r : record.steps) {
    if (r.s < s_from - 1e-9 || r.s > s_to + 1e-9) continue;
    s.push_back(r.s);
    q.push_back(r.q_sup);
    g.push_back(r.grad_q_sup);
    rep.q_scaled_max = std::max(rep.q_scaled_max, r.q_sup * std::sqrt(r.s));
    rep.grad_scaled_max = std::max(rep.grad_scaled_max, r.grad_q_sup * std::sqrt(r.s));
  }
  if (s.size() < 10) throw std::invalid_argument("trapped_decay: fewer than 10 rows in the window");
  rep.q_slope = loglog_slope(s, q);
  rep.grad_slope = loglog_slope(s, g);
  return rep;
}

ForcingReport forcing_check(const TrajectoryRecord& record, double s_from) {
  ForcingReport rep;
  for (const StepRecord& r : record.steps) {
    if (r.s < s_from - 1e-9) continue;
    ++rep.rows;
    if (r.R_sup > 0.0) rep.max_N_over_R = std::max(rep.max_N_over_R, r.N_sup / r.R_sup);
    rep.max_N_s4 = std::max(rep.max_N_s4, r.N_sup * std::pow(r.s, 4));
  }
  return rep;
}

WitnessResult witness_grid(const SolverConfig& cfg, const ModelParams& params,
                           const TrapParams& trap, double s0, int n, const ShootOptions& opts) {
  if (n < 2) throw std::invalid_argument("witness_grid: need n >= 2");
  const ModeMap map = initial_mode_map(s0, params, cfg.grid, trap);
  WitnessResult res;
  const auto count = static_cast<std::size_t>(n * n);
  res.points.resize(count);
  parallel_for(count, opts.threads, [&](std::size_t k) {
    const double fi = static_cast<double>(k % static_cast<std::size_t>(n)) / (n - 1);
    const double fj = static_cast<double>(k / static_cast<std::size_t>(n)) / (n - 1);
    const double d0 = map.d0_lo + fi * (map.d0_hi - map.d0_lo);
    const double d1 = map.d1_lo + fj * (map.d1_hi - map.d1_lo);
    res.points[k] = evaluate_corner(d0, d1, s0, cfg, params, trap, opts);
  });
  std::vector<ExitInfo> batch;
  for (const auto& c : res.points) batch.push_back(c.exit);
  res.report = reduction_witness(batch);
  return res;
}

OdeOracleReport homogeneous_oracle(double p, double c, double u_cap, double threshold) {
  const ModelParams params = make_params(p, 0.0, 0.0, 0.0, 0.0, 0.0);
  PhysicalConfig cfg;
  cfg.grid = Grid{0.0, 0.1, 10};
  cfg.boundary = PhysicalBoundary::Neumann;
  cfg.zoom = false;
  cfg.blowup_threshold = threshold;
  OdeOracleReport rep;
  rep.T_exact = std::pow(c, 1.0 - p) / (p - 1.0);
  cfg.t_budget = 2.0 * rep.T_exact;
  const Field u0(cfg.grid, std::vector<double>(cfg.grid.size(), c), 0.0);
  const PhysicalRun run = integrate_u(u0, params, cfg);
  if (!run.est.blew_up) throw std::runtime_error("homogeneous oracle: no blow-up");
  rep.T_est = run.est.T_est;
  rep.T_rel_err = std::abs(rep.T_est - rep.T_exact) / rep.T_exact;
  rep.fit_quality = run.est.fit_quality;
  for (const PhysicalRow& r : run.rows) {
    if (r.u_max > u_cap) break;
    const double exact = std::pow((p - 1.0) * (rep.T_exact - r.t), -1.0 / (p - 1.0));
    rep.path_rel_err = std::max(rep.path_rel_err, std::abs(r.u_max - exact) / exact);
  }
  return rep;
}

}  // namespace blowup
