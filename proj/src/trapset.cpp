#include "blowup/trapset.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/core.h>

namespace blowup {

std::string_view component_name(Component c) {
  switch (c) {
    case Component::Q0: return "q0";
    case Component::Q1: return "q1";
    case Component::Q2: return "q2";
    case Component::QMinus: return "q_minus";
    case Component::QE: return "q_e";
  }
  return "?";
}

TrapParams make_trap(double A, double K0) {
  if (!(A >= 1.0)) throw std::invalid_argument(fmt::format("trap: A must be >= 1 (got {})", A));
  if (!(K0 > 0.0)) throw std::invalid_argument(fmt::format("trap: K0 must be > 0 (got {})", K0));
  return TrapParams{A, K0};
}

std::array<double, 5> trap_bounds(const TrapParams& trap, double s) {
  const double A = trap.A;
  const double s2 = s * s;
  return {A / s2, A / s2, A * A * std::log(s) / s2, A / s2, A * A / std::sqrt(s)};
}

namespace {

TrapStatus status_from(const std::array<double, 5>& measured, double s, const TrapParams& trap) {
  const auto bounds = trap_bounds(trap, s);
  TrapStatus st;
  double worst = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    st.margins[k] = bounds[k] - measured[k];
    if (st.margins[k] < worst) {
      worst = st.margins[k];
      st.violated = static_cast<Component>(k);
    }
  }
  st.inside = !st.violated.has_value();
  return st;
}

}  // namespace

TrapStatus check_membership(const ModeSummary& m, double s, const TrapParams& trap) {
  return status_from({std::abs(m.modes[0]), std::abs(m.modes[1]), std::abs(m.modes[2]),
                      m.minus_seminorm, m.qe_sup},
                     s, trap);
}

TrapStatus check_membership(const SpectralDecomp& d, double s, const TrapParams& trap) {
  return status_from({std::abs(d.q0), std::abs(d.q1), std::abs(d.q2), seminorm_minus(d),
                      sup_norm(d.q_e)},
                     s, trap);
}

TrapStatus check_membership(const StepRecord& r, const TrapParams& trap) {
  return status_from({std::abs(r.modes[0]), std::abs(r.modes[1]), std::abs(r.modes[2]),
                      r.minus_seminorm, r.qe_sup},
                     r.s, trap);
}

DerivedBoundsReport check_derived_bounds(const SpectralDecomp& d, double s,
                                         const TrapParams& trap) {
  const double A2 = trap.A * trap.A;
  const double env_b = A2 * std::log(s) / (s * s);
  const double outer = 2.0 * d.K0 * std::sqrt(s);
  const Grid& g = d.q_minus.grid;
  DerivedBoundsReport rep;
  double sup_q = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = g.node(i);
    const double ay = std::abs(y);
    double qb = 0.0;
    if (ay <= outer) {
      qb = d.q0 + d.q1 * y + d.q2 * (y * y - 2.0) + d.q_minus[i];
      rep.C_blowup_region = std::max(rep.C_blowup_region, std::abs(qb) / (env_b * (1.0 + ay * ay * ay)));
    }
    sup_q = std::max(sup_q, std::abs(qb + d.q_e[i]));
  }
  rep.C_sup = sup_q * std::sqrt(s) / A2;
  return rep;
}

ExitInfo exit_classify(const TrajectoryRecord& record, const TrapParams& trap) {
  if (record.steps.empty()) throw NoViolationError();
  const StepRecord& last = record.steps.back();
  const TrapStatus st = check_membership(last, trap);
  if (st.inside) throw NoViolationError();

  ExitInfo info;
  info.reason = ExitReason::Trap;
  info.violated = st.violated;
  info.s_exit = last.s;
  const int m = static_cast<int>(*st.violated);
  if (m > 1) return info;

  info.mode = m;
  info.omega = last.modes[m] >= 0.0 ? 1 : -1;

  const std::size_t k = record.steps.size() - 1;
  const double h = record.ds;
  if (k >= 2) {
    const double q_k = record.steps[k].modes[m];
    const double q_k1 = record.steps[k - 1].modes[m];
    const double q_k2 = record.steps[k - 2].modes[m];
    info.dq_ds = (3.0 * q_k - 4.0 * q_k1 + q_k2) / (2.0 * h);
  } else {
    // Too little history: stitch on the continuation rows and difference forward.
    std::vector<double> q{last.modes[m]};
    for (const auto& r : record.continuation) q.push_back(r.modes[m]);
    if (q.size() >= 3) {
      info.dq_ds = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h);
    } else if (q.size() == 2) {
      info.dq_ds = (q[1] - q[0]) / h;
    } else if (k == 1) {
      info.dq_ds = (last.modes[m] - record.steps[0].modes[m]) / h;
    }
  }
  info.transverse = info.omega * info.dq_ds > 0.0;
  return info;
}

ReductionReport reduction_witness(std::span<const ExitInfo> batch) {
  if (batch.empty()) throw std::invalid_argument("reduction_witness: empty batch");
  ReductionReport rep;
  rep.runs = batch.size();
  for (const ExitInfo& e : batch) {
    if (!e.exited()) {
      ++rep.survivors;
      continue;
    }
    ++rep.exits;
    if (e.violated) ++rep.by_component[static_cast<std::size_t>(*e.violated)];
    if (e.expanding()) {
      ++rep.expanding_exits;
      if (e.transverse) ++rep.transverse_exits;
    }
  }
  rep.expanding_fraction =
      rep.exits == 0 ? 1.0 : static_cast<double>(rep.expanding_exits) / rep.exits;
  rep.transverse_fraction =
      rep.expanding_exits == 0 ? 1.0
                               : static_cast<double>(rep.transverse_exits) / rep.expanding_exits;
  return rep;
}

}  // namespace blowup
