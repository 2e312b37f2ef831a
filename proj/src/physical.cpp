#include "blowup/physical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "blowup/parallel.hpp"

namespace blowup {

void validate(const PhysicalConfig& cfg) {
  auto bad = [](const char* field, const char* why) {
    throw std::invalid_argument(fmt::format("physical.{}: {}", field, why));
  };
  if (!(cfg.dt0 > 0.0)) bad("dt0", "must be positive");
  if (!(cfg.lambda > 0.0)) bad("lambda", "must be positive");
  if (!(cfg.blowup_threshold > 0.0)) bad("blowup_threshold", "must be positive");
  if (!(cfg.t_budget > 0.0)) bad("t_budget", "must be positive");
  if (!(cfg.grid.dy > 0.0) || cfg.grid.half_count < 4) bad("grid", "needs dx > 0 and >= 9 nodes");
  if (cfg.zoom && cfg.grid.half_count % 2 != 0) bad("grid", "half_count must be even when zooming");
  if (!(cfg.snapshot_log_step > 0.0)) bad("snapshot_log_step", "must be positive");
}

Grid physical_grid(double s0, double scale, std::size_t half_count) {
  const double T = std::exp(-s0);
  const double width = scale * std::sqrt(T * s0);
  return Grid{0.0, width / static_cast<double>(half_count), half_count};
}

Field initial_u(const InitialDataParams& idp, const ModelParams& params, const Grid& xgrid) {
  const double T = std::exp(-idp.s0);
  const double amp = std::pow(T, -1.0 / (params.p - 1.0));
  const double len = std::sqrt(T * idp.s0);
  return sample(
      xgrid,
      [&](double x) {
        const double z = x / len;
        const ProfileValues pv = profile_values(params, z);
        return amp * pv.f * (1.0 + (idp.d0 + idp.d1 * z) * pv.f_pm1);
      },
      0.0);
}

namespace {

class Rhs {
 public:
  Rhs(const ModelParams& params, PhysicalBoundary bc) : params_(params), bc_(bc) {}

  void operator()(const std::vector<double>& u, double dx, std::vector<double>& out) const {
    const std::size_t n = u.size();
    const double idx2 = 1.0 / (dx * dx);
    const double i2dx = 0.5 / dx;
    const bool p2 = params_.p == 2.0;
    const bool forced = !params_.pure_semilinear();
    auto node = [&](double um, double u0, double up) {
      // (um + up) keeps mirrored nodes bitwise symmetric.
      double r = ((um + up) - 2.0 * u0) * idx2;
      r += p2 ? u0 * std::abs(u0) : rpow(std::abs(u0), params_.p - 1.0) * u0;
      if (forced) {
        r += params_.mu0;
        if (params_.mu_bar != 0.0) r += params_.mu_bar * rpow(std::abs(u0), params_.alpha_bar);
        if (params_.mu != 0.0) r += params_.mu * rpow(std::abs((up - um) * i2dx), params_.alpha);
      }
      return r;
    };
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = node(u[i - 1], u[i], u[i + 1]);
    if (bc_ == PhysicalBoundary::Neumann) {
      out[0] = node(u[1], u[0], u[1]);
      out[n - 1] = node(u[n - 2], u[n - 1], u[n - 2]);
    } else {
      out[0] = 0.0;
      out[n - 1] = 0.0;
    }
  }

 private:
  ModelParams params_;
  PhysicalBoundary bc_;
};

std::size_t argmax_abs(const std::vector<double>& u) {
  std::size_t k = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > best) {
      best = std::abs(u[i]);
      k = i;
    }
  }
  return k;
}

double grad_sup(const std::vector<double>& u, double dx) {
  double g = 0.0;
  for (std::size_t i = 1; i + 1 < u.size(); ++i) g = std::max(g, std::abs(u[i + 1] - u[i - 1]));
  return g * 0.5 / dx;
}

// Parabola through the peak node and its two neighbours.
double refine_peak(const Field& f, std::size_t k) {
  const double x = f.grid.node(k);
  if (k == 0 || k + 1 >= f.size()) return x;
  const double um = std::abs(f[k - 1]), u0 = std::abs(f[k]), up = std::abs(f[k + 1]);
  const double curv = um - 2.0 * u0 + up;
  if (!(curv < 0.0)) return x;
  return x + 0.5 * f.grid.dy * (um - up) / curv;
}

// Halves dx about node ic of the old grid; even new nodes coincide with old ones.
Field zoom_in(const Field& u, std::size_t ic) {
  const Grid& g = u.grid;
  const std::size_t H = g.half_count;
  Grid ng{g.node(ic), 0.5 * g.dy, H};
  Field out(ng, u.s);
  for (std::size_t j = 0; j < ng.size(); ++j) {
    const long off = static_cast<long>(j) - static_cast<long>(H);
    if (off % 2 == 0) {
      out[j] = u[static_cast<std::size_t>(static_cast<long>(ic) + off / 2)];
    } else {
      const auto k = static_cast<std::size_t>(static_cast<long>(ic) + (off - 1) / 2);
      out[j] = (9.0 * (u[k] + u[k + 1]) - (u[k - 1] + u[k + 2])) / 16.0;
    }
  }
  return out;
}

// Cubic Lagrange interpolation on a uniform grid.
double interp(const Field& f, double x) {
  const double r = (x - f.grid.lo()) / f.grid.dy;
  const auto n = static_cast<long>(f.size());
  if (r < 0.0 || r > static_cast<double>(n - 1)) {
    throw GridError(fmt::format("x={} outside [{}, {}]", x, f.grid.lo(), f.grid.hi()));
  }
  long k = std::clamp(static_cast<long>(std::floor(r)), 1L, n - 3);
  const double t = r - static_cast<double>(k);
  const auto at = [&](long i) { return f.values[static_cast<std::size_t>(i)]; };
  const double w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return w0 * at(k - 1) + w1 * at(k) + w2 * at(k + 1) + w3 * at(k + 2);
}

}  // namespace

PhysicalRun integrate_u(const Field& u0, const ModelParams& params, const PhysicalConfig& cfg) {
  validate(cfg);
  if (!(u0.grid == cfg.grid)) throw std::invalid_argument("initial data not on the configured grid");

  const double p = params.p;
  const double zoom_growth = std::pow(2.0, 2.0 / (p - 1.0));
  const Rhs rhs(params, cfg.boundary);
  std::vector<double> snap_times = cfg.snapshot_times;
  std::sort(snap_times.begin(), snap_times.end());
  std::size_t next_snap = 0;
  while (next_snap < snap_times.size() && snap_times[next_snap] <= 0.0) ++next_snap;

  PhysicalRun run;
  Field u = u0;
  u.s = 0.0;
  double t = 0.0;
  double t_carry = 0.0;  // Kahan compensation; dt falls far below eps * t near blow-up
  const std::size_t n = u.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

  auto record = [&](double dt) {
    const std::size_t k = argmax_abs(u.values);
    run.rows.push_back({t, std::abs(u[k]), grad_sup(u.values, u.grid.dy), u.grid.node(k), dt,
                        run.zooms});
  };
  record(0.0);
  run.snapshots.push_back(u);
  double snap_log = std::log(run.rows.back().u_max);
  double zoom_ref = run.rows.back().u_max;

  while (true) {
    const double umax = run.rows.back().u_max;
    if (umax >= cfg.blowup_threshold) {
      run.est.blew_up = true;
      break;
    }
    if (t >= cfg.t_budget || run.steps >= cfg.max_steps) break;

    if (cfg.zoom && run.zooms < cfg.max_zooms && umax >= zoom_ref * zoom_growth) {
      const std::size_t H = u.grid.half_count;
      const std::size_t peak = argmax_abs(u.values);
      std::size_t ic = H;
      if (std::abs(u.grid.node(peak) - u.grid.center) > 0.25 * u.grid.half_width()) {
        ic = std::clamp(peak, H / 2 + 1, 3 * H / 2 - 1);
      }
      u = zoom_in(u, ic);
      ++run.zooms;
      zoom_ref = umax;
    }

    const double dx = u.grid.dy;
    double dt = std::min({cfg.dt0, cfg.lambda * std::pow(umax, 1.0 - p), 0.25 * dx * dx});
    dt = std::min(dt, cfg.t_budget - t);
    bool hit_snap = false;
    if (next_snap < snap_times.size() && t + dt >= snap_times[next_snap]) {
      dt = snap_times[next_snap] - t;
      hit_snap = true;
    }

    const auto& v = u.values;
    rhs(v, dx, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = v[i] + 0.5 * dt * k1[i];
    rhs(tmp, dx, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = v[i] + 0.5 * dt * k2[i];
    rhs(tmp, dx, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = v[i] + dt * k3[i];
    rhs(tmp, dx, k4);
    for (std::size_t i = 0; i < n; ++i) {
      u.values[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    if (hit_snap) {
      t = snap_times[next_snap];
      t_carry = 0.0;
    } else {
      const double yk = dt - t_carry;
      const double tk = t + yk;
      t_carry = (tk - t) - yk;
      t = tk;
    }
    u.s = t;
    ++run.steps;
    for (double x : u.values) {
      if (!std::isfinite(x)) {
        throw std::runtime_error(fmt::format("non-finite solution at t={}", t));
      }
    }
    record(dt);

    const double lu = std::log(run.rows.back().u_max);
    if (hit_snap) {
      run.snapshots.push_back(u);
      ++next_snap;
    } else if (lu >= snap_log + cfg.snapshot_log_step) {
      run.snapshots.push_back(u);
      snap_log = lu;
    }
  }
  if (run.snapshots.back().s != t) run.snapshots.push_back(u);

  BlowupEstimate& est = run.est;
  est.t_last = t;
  est.u_last = run.rows.back().u_max;
  est.dx_final = u.grid.dy;
  est.a_est = refine_peak(u, argmax_abs(u.values));
  if (!est.blew_up) {
    est.T_est = std::numeric_limits<double>::quiet_NaN();
    return run;
  }

  // Linear fit of ||u||^{-(p-1)} against t over the last decade of growth.
  constexpr std::size_t kMinFit = 8;
  std::size_t first = run.rows.size();
  while (first > 0 && run.rows[first - 1].u_max >= cfg.blowup_threshold / 10.0) --first;
  first = std::min(first, run.rows.size() - std::min(run.rows.size(), kMinFit));
  const std::size_t m = run.rows.size() - first;
  double st = 0.0, sy = 0.0;
  std::vector<double> tt(m), yy(m);
  for (std::size_t i = 0; i < m; ++i) {
    tt[i] = run.rows[first + i].t - t;
    yy[i] = std::pow(run.rows[first + i].u_max, 1.0 - p);
    st += tt[i];
    sy += yy[i];
  }
  const double tm = st / static_cast<double>(m), ym = sy / static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += (tt[i] - tm) * (yy[i] - ym);
    sxx += (tt[i] - tm) * (tt[i] - tm);
  }
  const double b = sxy / sxx;
  const double a = ym - b * tm;
  double res = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = yy[i] - (a + b * tt[i]);
    res += r * r;
    mag += yy[i] * yy[i];
  }
  est.T_est = t - a / b;
  est.fit_quality = std::sqrt(res / mag);
  est.fit_points = m;
  return run;
}

Field to_selfsim(const Field& u_snapshot, double T, double a, const ModelParams& params,
                 const Grid& ygrid) {
  const double tau = T - u_snapshot.s;
  if (!(tau > 0.0)) throw std::invalid_argument("snapshot at or after the blow-up time");
  const double rt = std::sqrt(tau);
  const double amp = std::pow(tau, 1.0 / (params.p - 1.0));
  return sample(
      ygrid, [&](double y) { return amp * interp(u_snapshot, a + y * rt); }, -std::log(tau));
}

ProfileErrorCurve profile_error(const PhysicalRun& run, const ModelParams& params,
                                double y_window, double dy, std::size_t min_points) {
  const BlowupEstimate& est = run.est;
  if (!est.blew_up) throw ProfileError("no blow-up detected");
  ProfileErrorCurve curve;
  const double u_cut = est.u_last / 10.0;
  for (const Field& snap : run.snapshots) {
    const double tau = est.T_est - snap.s;
    if (!(tau > 0.0) || !(tau < 1.0) || sup_norm(snap) > u_cut) continue;
    const double s = -std::log(tau);
    const double rt = std::sqrt(tau);
    // Inner half of the snapshot's domain, seen from a.
    const double reach =
            std::min(snap.grid.hi() - est.a_est, est.a_est - snap.grid.lo()) - 0.5 * snap.grid.half_width();
    if (!(reach > 0.0)) continue;
    if (reach / rt < y_window) continue;
    const auto hc = static_cast<std::size_t>(std::floor(y_window / dy + 0.5));
    const Grid yg{0.0, dy, hc};
    const Field w = to_selfsim(snap, est.T_est, est.a_est, params, yg);
    const std::vector<double> wy = gradient(w.values, dy);
    const double rs = std::sqrt(s);
    ProfileErrorRow row;
    row.t = snap.s;
    row.tau = tau;
    row.s = s;
    row.y_max = yg.half_width();
    for (std::size_t i = 0; i < yg.size(); ++i) {
      const double z = yg.node(i) / rs;
      const ProfileValues pv = profile_values(params, z);
      row.e_inf = std::max(row.e_inf, std::abs(w[i] - pv.f));
      row.e_grad = std::max(row.e_grad, std::abs(wy[i] - pv.fprime / rs));
    }
    row.e = row.e_inf + row.e_grad;
    row.scaled = row.e * rs;
    row.center_ratio = w[hc] / params.kappa;
    curve.rows.push_back(row);
  }
  if (curve.rows.size() < min_points) {
    throw ProfileError(fmt::format("only {} usable snapshots before the threshold (need {})",
                                   curve.rows.size(), min_points));
  }
  const auto m = static_cast<double>(curve.rows.size());
  double xs = 0.0, ys = 0.0;
  for (const auto& r : curve.rows) {
    xs += r.s;
    ys += r.scaled;
  }
  const double xm = xs / m, ym = ys / m;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& r : curve.rows) {
    sxy += (r.s - xm) * (r.scaled - ym);
    sxx += (r.s - xm) * (r.s - xm);
  }
  const double span = curve.rows.back().s - curve.rows.front().s;
  curve.trend = (sxx > 0.0 ? sxy / sxx : 0.0) * span / ym;
  curve.final_center_ratio = curve.rows.back().center_ratio;
  return curve;
}

Field perturb(const Field& u0, const Perturbation& pert) {
  const double amp = pert.eps * sup_norm(u0);
  Field out = u0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = (out.grid.node(i) - pert.center) / pert.width;
    out[i] += amp * std::exp(-r * r);
  }
  return out;
}

StabilityReport stability_probe(const Field& u0_base, std::span<const Perturbation> perts,
                                const ModelParams& params, const PhysicalConfig& cfg,
                                int threads) {
  const PhysicalRun base = integrate_u(u0_base, params, cfg);
  if (!base.est.blew_up) throw std::runtime_error("base data does not blow up within the budget");
  StabilityReport rep;
  rep.T_hat = base.est.T_est;
  rep.a_hat = base.est.a_est;
  rep.dx_final = base.est.dx_final;
  rep.entries.resize(perts.size());
  parallel_for(perts.size(), threads, [&](std::size_t i) {
    StabilityEntry& e = rep.entries[i];
    e.pert = perts[i];
    const PhysicalRun r = integrate_u(perturb(u0_base, perts[i]), params, cfg);
    e.blew_up = r.est.blew_up;
    e.T = r.est.T_est;
    e.a = r.est.a_est;
    e.dT = std::abs(e.T - rep.T_hat);
    e.da = std::abs(e.a - rep.a_hat);
  });
  return rep;
}

bool shrinks_with_eps(std::vector<std::pair<double, double>> eps_value, double floor) {
  std::sort(eps_value.begin(), eps_value.end(),
            [](const auto& l, const auto& r) { return l.first > r.first; });
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& [eps, v] : eps_value) {
    const double x = std::abs(v) <= floor ? 0.0 : std::abs(v);
    if (!(x <= prev) || !std::isfinite(x)) return false;
    prev = x;
  }
  return true;
}

}  // namespace blowup
