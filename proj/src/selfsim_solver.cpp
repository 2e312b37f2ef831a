#include "blowup/selfsim_solver.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace blowup {

std::string_view scheme_name(Scheme s) {
  return s == Scheme::SemigroupSplit ? "semigroup-split" : "imex-cn";
}

std::string_view bc_name(BoundaryCondition b) {
  return b == BoundaryCondition::DirichletProfile ? "dirichlet-profile" : "extrapolation";
}

void validate(const SolverConfig& cfg) {
  if (!(cfg.ds > 0.0)) throw std::invalid_argument(fmt::format("solver: ds must be > 0 (got {})", cfg.ds));
  if (!(cfg.s_end > cfg.s0)) {
    throw std::invalid_argument(
        fmt::format("solver: s_end ({}) must exceed s0 ({})", cfg.s_end, cfg.s0));
  }
  if (!cfg.grid.symmetric() || cfg.grid.size() < 5) {
    throw std::invalid_argument("solver: grid must be symmetric about 0 with at least 5 nodes");
  }
}

struct SelfSimSolver::Frame {
  double t = -1.0;
  ForcingWeights weights;
  std::vector<double> phi, phi_y, R;
};

struct SelfSimSolver::Workspace {
  // Slots 0..1 hold the two stage times of a half step; slot 2 is the end time.
  std::array<Frame, 3> frames;
  std::vector<double> k, mid, scratch, grad;
  std::vector<double> cp, dp;
};

const SelfSimSolver::Frame& SelfSimSolver::frame(double t, int slot) const {
  for (const Frame& f : ws_->frames) {
    if (f.t == t) return f;
  }
  Frame& f = ws_->frames[static_cast<std::size_t>(slot)];
  fill_frame(f, t);
  return f;
}

SelfSimSolver::SelfSimSolver(const SolverConfig& cfg, const ModelParams& params, TermMask mask)
    : cfg_(cfg), params_(params), mask_(mask), y_(cfg.grid.nodes()),
      ws_(std::make_unique<Workspace>()) {
  validate(cfg_);
  if (cfg_.scheme == Scheme::SemigroupSplit) {
    kernel_ = std::make_unique<SemigroupOperator>(cfg_.ds, cfg_.grid);
  } else {
    const std::size_t n = y_.size();
    const double dy = cfg_.grid.dy;
    cn_lower_.assign(n, 0.0);
    cn_diag_.assign(n, 0.0);
    cn_upper_.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      cn_lower_[i] = 1.0 / (dy * dy) + y_[i] / (4.0 * dy);
      cn_diag_[i] = -2.0 / (dy * dy);
      cn_upper_[i] = 1.0 / (dy * dy) - y_[i] / (4.0 * dy);
    }
  }
}

SelfSimSolver::~SelfSimSolver() = default;
SelfSimSolver::SelfSimSolver(SelfSimSolver&&) noexcept = default;
SelfSimSolver& SelfSimSolver::operator=(SelfSimSolver&&) noexcept = default;

void SelfSimSolver::fill_frame(Frame& fr, double t) const {
  const std::size_t n = y_.size();
  fr.t = t;
  fr.weights = forcing_weights(params_, t);
  fr.phi.resize(n);
  fr.phi_y.resize(n);
  fr.R.resize(n);
  const double inv_rs = 1.0 / std::sqrt(t);
  const double c = params_.kappa / (2.0 * params_.p * t);
  if (params_.p == 2.0) {
    // f = 1/(1 + z^2/8): branch-free loop the compiler can vectorize.
    const double inv_t = 1.0 / (t);
    const double r0 = c * inv_t - c;
    double* phi = fr.phi.data();
    double* phi_y = fr.phi_y.data();
    double* R = fr.R.data();
    const double* y = y_.data();
    const double r_on = mask_.R ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = y[i] * inv_rs;
      const double z2 = z * z;
      const double f = 1.0 / (1.0 + 0.125 * z2);
      const double f2 = f * f;
      const double fprime = -0.25 * z * f2;
      const double fsecond = -0.25 * f2 * (1.0 - 0.5 * z2 * f);
      phi[i] = f + c;
      phi_y[i] = fprime * inv_rs;
      R[i] = r_on * (fsecond * inv_t + 0.5 * z * fprime * inv_t + r0 + c * (2.0 * f + c));
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double z = y_[i] * inv_rs;
    const ProfileValues pv = profile_values(params_, z);
    fr.phi[i] = pv.f + c;
    fr.phi_y[i] = pv.fprime * inv_rs;
    fr.R[i] = mask_.R ? remainder_from(params_, pv, z, t) : 0.0;
  }
}

void SelfSimSolver::rhs_q(const std::vector<double>& q, const Frame& fr,
                          std::vector<double>& out) const {
  const std::size_t n = q.size();
  const double p = params_.p;
  const double lin = p / (p - 1.0);
  const bool need_grad = mask_.N && fr.weights.grad != 0.0;
  std::vector<double>& gq = ws_->grad;
  if (need_grad) gq = gradient(q, cfg_.grid.dy);
  out.resize(n);
  const bool plain_n = !mask_.N || (fr.weights.grad == 0.0 && fr.weights.value == 0.0);
  if (p == 2.0 && mask_.V && mask_.B && plain_n) {
    const double n0 = mask_.N ? fr.weights.constant : 0.0;
    const double* phi = fr.phi.data();
    const double* R = fr.R.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double w = phi[i] + q[i];
      out[i] = std::abs(w) * w - phi[i] * phi[i] - 2.0 * q[i] + R[i] + n0;
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = fr.phi[i];
    const double w = ph + q[i];
    double v = 0.0;
    if (mask_.V && mask_.B) {
      v = rpow(std::abs(w), p - 1.0) * w - rpow(ph, p) - lin * q[i];
    } else {
      if (mask_.V) v += (p * rpow(ph, p - 1.0) - lin) * q[i];
      if (mask_.B) v += nonlinear_B(params_, ph, q[i]);
    }
    v += fr.R[i];
    if (mask_.N) v += perturbation_N(params_, fr.weights, w, need_grad ? fr.phi_y[i] + gq[i] : 0.0);
    out[i] = v;
  }
}

void SelfSimSolver::rhs_w(const std::vector<double>& w, double t, std::vector<double>& out) const {
  const std::size_t n = w.size();
  const double p = params_.p;
  const ForcingWeights fw = forcing_weights(params_, t);
  const bool need_grad = mask_.N && fw.grad != 0.0;
  std::vector<double>& gw = ws_->grad;
  if (need_grad) gw = gradient(w, cfg_.grid.dy);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = rpow(std::abs(w[i]), p - 1.0) * w[i] - w[i] / (p - 1.0);
    if (mask_.N) v += perturbation_N(params_, fw, w[i], need_grad ? gw[i] : 0.0);
    out[i] = v;
  }
}

void SelfSimSolver::linear(std::vector<double>& v, double shift) const {
  const std::size_t n = v.size();
  const double ds = cfg_.ds;
  std::vector<double>& scratch = ws_->scratch;
  scratch.resize(n);
  if (kernel_) {
    kernel_->apply(v, scratch);
    const double factor = shift == 0.0 ? 1.0 : std::exp(shift * ds);
    for (std::size_t i = 0; i < n; ++i) v[i] = factor * scratch[i];
    return;
  }
  // Crank-Nicolson for (M + (1 + shift)) with M = D2 - (y/2) D1; boundary rows identity.
  const double c = 1.0 + shift;
  const double h = 0.5 * ds;
  std::vector<double>& rhs = scratch;
  rhs[0] = v[0];
  rhs[n - 1] = v[n - 1];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    rhs[i] = v[i] + h * (cn_lower_[i] * v[i - 1] + (cn_diag_[i] + c) * v[i] + cn_upper_[i] * v[i + 1]);
  }
  // Thomas algorithm on (I - h (M + c)).
  std::vector<double>& cp = ws_->cp;
  std::vector<double>& dp = ws_->dp;
  cp.assign(n, 0.0);
  dp.assign(n, 0.0);
  dp[0] = rhs[0];
  for (std::size_t i = 1; i < n; ++i) {
    double a = 0.0, b = 1.0, cu = 0.0;
    if (i + 1 < n) {
      a = -h * cn_lower_[i];
      b = 1.0 - h * (cn_diag_[i] + c);
      cu = -h * cn_upper_[i];
    }
    const double denom = b - a * cp[i - 1];
    cp[i] = cu / denom;
    dp[i] = (rhs[i] - a * dp[i - 1]) / denom;
  }
  v[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) v[i] = dp[i] - cp[i] * v[i + 1];
}

void SelfSimSolver::apply_bc_q(std::vector<double>& q, double s) const {
  const std::size_t n = q.size();
  if (cfg_.bc == BoundaryCondition::DirichletProfile) {
    const double v = -params_.kappa / (2.0 * params_.p * s);
    q[0] = v;
    q[n - 1] = v;
  } else {
    q[0] = 2.0 * q[1] - q[2];
    q[n - 1] = 2.0 * q[n - 2] - q[n - 3];
  }
}

void SelfSimSolver::apply_bc_w(std::vector<double>& w, double s) const {
  const std::size_t n = w.size();
  if (cfg_.bc == BoundaryCondition::DirichletProfile) {
    const double rs = std::sqrt(s);
    w[0] = profile_f(params_, y_[0] / rs);
    w[n - 1] = profile_f(params_, y_[n - 1] / rs);
  } else {
    w[0] = 2.0 * w[1] - w[2];
    w[n - 1] = 2.0 * w[n - 2] - w[n - 3];
  }
}

void SelfSimSolver::check_finite(const std::vector<double>& v, double s) const {
  for (double x : v) {
    if (!std::isfinite(x)) throw DivergenceError(s, fmt::format("divergence: non-finite value at s={}", s));
  }
}

void SelfSimSolver::advance_q(std::vector<double>& q, double s) const {
  const double ds = cfg_.ds;
  const double h = 0.5 * ds;
  const std::size_t n = q.size();
  std::vector<double>& k = ws_->k;
  std::vector<double>& mid = ws_->mid;
  mid.resize(n);
  auto half = [&](double t) {
    rhs_q(q, frame(t, 0), k);
    for (std::size_t i = 0; i < n; ++i) mid[i] = q[i] + 0.5 * h * k[i];
    rhs_q(mid, frame(t + 0.5 * h, 1), k);
    for (std::size_t i = 0; i < n; ++i) q[i] += h * k[i];
  };
  half(s);
  linear(q, 0.0);
  apply_bc_q(q, s + h);
  half(s + h);
  apply_bc_q(q, s + ds);
  check_finite(q, s + ds);
}

void SelfSimSolver::advance_w(std::vector<double>& w, double s) const {
  const double ds = cfg_.ds;
  const double h = 0.5 * ds;
  const std::size_t n = w.size();
  std::vector<double>& k = ws_->k;
  std::vector<double>& mid = ws_->mid;
  mid.resize(n);
  auto half = [&](double t) {
    rhs_w(w, t, k);
    for (std::size_t i = 0; i < n; ++i) mid[i] = w[i] + 0.5 * h * k[i];
    rhs_w(mid, t + 0.5 * h, k);
    for (std::size_t i = 0; i < n; ++i) w[i] += h * k[i];
  };
  half(s);
  linear(w, -1.0);
  apply_bc_w(w, s + h);
  half(s + h);
  apply_bc_w(w, s + ds);
  check_finite(w, s + ds);
}

Field SelfSimSolver::step_q(const Field& q, double s) const {
  if (!(q.grid == cfg_.grid)) throw GridError("step_q: field grid differs from solver grid");
  Field out = q;
  advance_q(out.values, s);
  out.s = s + cfg_.ds;
  return out;
}

Field SelfSimSolver::step_w(const Field& w, double s) const {
  if (!(w.grid == cfg_.grid)) throw GridError("step_w: field grid differs from solver grid");
  Field out = w;
  advance_w(out.values, s);
  out.s = s + cfg_.ds;
  return out;
}

TermFields SelfSimSolver::terms(const Field& q, double s) const {
  Frame fr;
  fill_frame(fr, s);
  const std::size_t n = q.size();
  const double p = params_.p;
  TermFields t{Field(cfg_.grid, s), Field(cfg_.grid, s), Field(cfg_.grid, s), Field(cfg_.grid, s)};
  const bool need_grad = fr.weights.grad != 0.0;
  std::vector<double> gq;
  if (need_grad) gq = gradient(q.values, cfg_.grid.dy);
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = fr.phi[i];
    t.Vq[i] = (p * rpow(ph, p - 1.0) - p / (p - 1.0)) * q[i];
    t.B[i] = nonlinear_B(params_, ph, q[i]);
    t.R[i] = fr.R[i];
    t.N[i] = perturbation_N(params_, fr.weights, ph + q[i], need_grad ? fr.phi_y[i] + gq[i] : 0.0);
  }
  return t;
}

std::array<double, 3> SelfSimSolver::term_sups(std::span<const double> q, double s) const {
  const Frame& fr = frame(s, 2);
  const std::size_t n = q.size();
  const bool need_grad = fr.weights.grad != 0.0;
  std::vector<double>& gq = ws_->grad;
  if (need_grad) gq = gradient(q, cfg_.grid.dy);
  std::array<double, 3> out{};
  if (params_.p == 2.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double ph = fr.phi[i];
      const double w = ph + q[i];
      out[0] = std::max(out[0], std::abs(std::abs(w) * w - ph * ph - 2.0 * ph * q[i]));
      out[1] = std::max(out[1], std::abs(fr.R[i]));
    }
    if (fr.weights.grad == 0.0 && fr.weights.value == 0.0) {
      out[2] = fr.weights.constant;
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
      out[2] = std::max(out[2], perturbation_N(params_, fr.weights, fr.phi[i] + q[i],
                                               need_grad ? fr.phi_y[i] + gq[i] : 0.0));
    }
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = fr.phi[i];
    out[0] = std::max(out[0], std::abs(nonlinear_B(params_, ph, q[i])));
    out[1] = std::max(out[1], std::abs(fr.R[i]));
    out[2] = std::max(out[2], perturbation_N(params_, fr.weights, ph + q[i],
                                             need_grad ? fr.phi_y[i] + gq[i] : 0.0));
  }
  return out;
}

Field step_w(const Field& w, double s, double ds, SolverConfig cfg, const ModelParams& params) {
  cfg.ds = ds;
  cfg.grid = w.grid;
  cfg.s0 = s;
  cfg.s_end = s + ds;
  return SelfSimSolver(cfg, params).step_w(w, s);
}

Field step_q(const Field& q, double s, double ds, SolverConfig cfg, const ModelParams& params) {
  cfg.ds = ds;
  cfg.grid = q.grid;
  cfg.s0 = s;
  cfg.s_end = s + ds;
  return SelfSimSolver(cfg, params).step_q(q, s);
}

namespace {

StepRecord make_row(const SelfSimSolver& solver, const SpectralProjector& proj,
                    const std::vector<double>& q, double s, double K0, Snapshot* snap) {
  const Grid& g = solver.config().grid;
  const ModeSummary sum = proj.summarize(q, s, K0);
  StepRecord r;
  r.s = s;
  r.modes = sum.modes;
  r.minus_seminorm = sum.minus_seminorm;
  r.qe_sup = sum.qe_sup;
  r.q_sup = sup_norm(q);
  r.grad_q_sup = sup_norm(gradient(q, g.dy));
  const auto sups = solver.term_sups(q, s);
  r.B_sup = sups[0];
  r.R_sup = sups[1];
  r.N_sup = sups[2];
  if (snap) {
    Field qf(g, q, s);
    TermFields t = solver.terms(qf, s);
    snap->s = s;
    snap->q = std::move(qf);
    snap->Vq = std::move(t.Vq);
    snap->B = std::move(t.B);
    snap->R = std::move(t.R);
    snap->N = std::move(t.N);
  }
  return r;
}

}  // namespace

TrajectoryResult run_trajectory(const Field& q_init, double s0, double s_end,
                                const SolverConfig& cfg_in, const ModelParams& params,
                                const TrapParams& trap, const RunOptions& opts) {
  SolverConfig cfg = cfg_in;
  cfg.grid = q_init.grid;
  cfg.s0 = s0;
  cfg.s_end = s_end;
  const SelfSimSolver solver(cfg, params, opts.mask);
  const SpectralProjector proj(cfg.grid);

  TrajectoryResult res;
  res.record.ds = cfg.ds;
  res.record.K0 = trap.K0;
  std::vector<double> q = q_init.values;
  const long nsteps = std::lround((s_end - s0) / cfg.ds);
  bool exited = false;

  for (long k = 0;; ++k) {
    const double s = s0 + static_cast<double>(k) * cfg.ds;
    Snapshot snap;
    const bool want_snap = opts.snapshot_every > 0 && k % opts.snapshot_every == 0;
    res.record.steps.push_back(make_row(solver, proj, q, s, trap.K0, want_snap ? &snap : nullptr));
    if (want_snap) res.record.snapshots.push_back(std::move(snap));

    if (!exited && !check_membership(res.record.steps.back(), trap).inside) {
      exited = true;
      if (opts.stop_on_exit) {
        std::vector<double> qc = q;
        try {
          for (int c = 0; c < opts.continuation_steps; ++c) {
            const double sc = s + c * cfg.ds;
            solver.advance_q(qc, sc);
            res.record.continuation.push_back(
                make_row(solver, proj, qc, sc + cfg.ds, trap.K0, nullptr));
          }
        } catch (const DivergenceError&) {
          // Difference quotients fall back to whatever rows were recorded.
        }
        res.exit = exit_classify(res.record, trap);
        break;
      }
      TrajectoryRecord head{res.record.ds, res.record.K0, res.record.steps, {}, {}};
      res.exit = exit_classify(head, trap);
    }
    if (k >= nsteps) break;
    try {
      solver.advance_q(q, s);
      if (sup_norm(q) > opts.divergence_cap) {
        throw DivergenceError(s + cfg.ds, fmt::format("divergence: |q| exceeded {} at s={}",
                                                      opts.divergence_cap, s + cfg.ds));
      }
    } catch (const DivergenceError& e) {
      res.diverged = true;
      res.s_diverged = e.s();
      if (!exited) {
        res.exit = ExitInfo{};
        res.exit.reason = ExitReason::Divergence;
        res.exit.s_exit = e.s();
      }
      break;
    }
  }
  res.final_q = Field(cfg.grid, std::move(q), res.record.steps.back().s);
  return res;
}

ModeOdeReport mode_ode_check(const TrajectoryRecord& record) {
  const auto& rows = record.steps;
  if (rows.size() < 10) {
    throw std::invalid_argument(
        fmt::format("mode_ode_check: window too short ({} rows, need 10)", rows.size()));
  }
  ModeOdeReport rep;
  rep.s_from = rows.front().s;
  rep.s_to = rows.back().s;
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    const double s = rows[i].s;
    const double h2 = rows[i + 1].s - rows[i - 1].s;
    for (int m = 0; m < 2; ++m) {
      const double dq = (rows[i + 1].modes[m] - rows[i - 1].modes[m]) / h2;
      const double dev = std::abs(dq - (1.0 - 0.5 * m) * rows[i].modes[m]) * s * s;
      rep.constants[m] = std::max(rep.constants[m], dev);
    }
  }
  rep.constant = std::max(rep.constants[0], rep.constants[1]);
  return rep;
}

DuhamelReport duhamel_split_check(const TrajectoryRecord& record, double tau, double s) {
  constexpr double kTimeTol = 1e-9;
  std::vector<const Snapshot*> snaps;
  for (const auto& sn : record.snapshots) {
    if (sn.s >= tau - kTimeTol && sn.s <= s + kTimeTol) snaps.push_back(&sn);
  }
  if (snaps.size() < 2 || std::abs(snaps.front()->s - tau) > kTimeTol ||
      std::abs(snaps.back()->s - s) > kTimeTol) {
    throw std::invalid_argument(
        fmt::format("duhamel_split_check: missing stored fields on [{}, {}]", tau, s));
  }
  const Grid grid = snaps.front()->q.grid;
  const std::size_t n = grid.size();
  std::vector<double> beta(n, 0.0), gamma(n, 0.0), delta(n, 0.0), bound(n, 0.0);
  std::vector<double> tmp(n), moved(n), absN(n);
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const double left = k == 0 ? 0.0 : snaps[k]->s - snaps[k - 1]->s;
    const double right = k + 1 == snaps.size() ? 0.0 : snaps[k + 1]->s - snaps[k]->s;
    const double w = 0.5 * (left + right);
    const double theta = s - snaps[k]->s;
    std::unique_ptr<SemigroupOperator> op;
    if (theta > kTimeTol) op = std::make_unique<SemigroupOperator>(theta, grid);
    auto accumulate = [&](const std::vector<double>& src, std::vector<double>& acc) {
      if (op) {
        op->apply(src, moved);
      } else {
        moved = src;
      }
      for (std::size_t i = 0; i < n; ++i) acc[i] += w * moved[i];
    };
    for (std::size_t i = 0; i < n; ++i) tmp[i] = snaps[k]->Vq[i] + snaps[k]->B[i];
    accumulate(tmp, beta);
    accumulate(snaps[k]->R.values, gamma);
    accumulate(snaps[k]->N.values, delta);
    for (std::size_t i = 0; i < n; ++i) absN[i] = std::abs(snaps[k]->N[i]);
    accumulate(absN, bound);
  }
  const Field alpha = apply_semigroup(s - tau, snaps.front()->q);
  const Field& q_s = snaps.back()->q;

  DuhamelReport rep;
  rep.tau = tau;
  rep.s = s;
  for (std::size_t i = 0; i < n; ++i) {
    const double sum = alpha[i] + beta[i] + gamma[i] + delta[i];
    rep.closure_residual = std::max(rep.closure_residual, std::abs(sum - q_s[i]));
  }
  rep.q_sup = sup_norm(q_s);
  const double scale = s * s * s / (s - tau);
  const SpectralDecomp dd = decompose(Field(grid, delta, s), s, record.K0);
  rep.C_delta2 = std::abs(dd.q2) * scale;
  rep.C_delta_minus = seminorm_minus(dd) * scale;
  rep.C_delta_e = sup_norm(dd.q_e) * scale;
  rep.C_comparison = sup_norm(bound) * scale;
  return rep;
}

}  // namespace blowup
