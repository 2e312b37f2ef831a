#include "blowup/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <utility>

#include <fmt/core.h>

#include "blowup/parallel.hpp"

namespace blowup {

Field initial_q(const InitialDataParams& idp, const ModelParams& params, const Grid& grid) {
  const double rs = std::sqrt(idp.s0);
  const double shift = params.kappa / (2.0 * params.p * idp.s0);
  return sample(
      grid,
      [&](double y) {
        const double z = y / rs;
        return profile_values(params, z).f_p * (idp.d0 + idp.d1 * z) - shift;
      },
      idp.s0);
}

ModeMap initial_mode_map(double s0, const ModelParams& params, const Grid& grid,
                         const TrapParams& trap) {
  const SpectralProjector proj(grid);
  auto modes = [&](double d0, double d1) {
    return proj.summarize(initial_q({d0, d1, s0}, params, grid).values, s0, trap.K0).modes;
  };
  const auto base = modes(0.0, 0.0);
  const auto e0 = modes(1.0, 0.0);
  const auto e1 = modes(0.0, 1.0);
  ModeMap m;
  m.s0 = s0;
  m.b0 = base[0];
  m.b1 = base[1];
  m.a0 = e0[0] - base[0];
  m.a1 = e1[1] - base[1];
  m.cross01 = e0[1] - base[1];
  m.cross10 = e1[0] - base[0];
  constexpr double kDegenerate = 1e-12;
  if (std::abs(m.a0) < kDegenerate || std::abs(m.a1) < kDegenerate) {
    throw DegenerateMapError(fmt::format(
        "degenerate initial mode map at s0={}: a0={}, a1={}", s0, m.a0, m.a1));
  }
  const double box = trap.A / (s0 * s0);
  auto span = [](double lo, double hi) { return std::pair{std::min(lo, hi), std::max(lo, hi)}; };
  std::tie(m.d0_lo, m.d0_hi) = span((-box - m.b0) / m.a0, (box - m.b0) / m.a0);
  std::tie(m.d1_lo, m.d1_hi) = span((-box - m.b1) / m.a1, (box - m.b1) / m.a1);
  return m;
}

InitialComponentsReport initial_components_check(const InitialDataParams& idp,
                                                 const ModelParams& params, const Grid& grid,
                                                 const TrapParams& trap) {
  const double s0 = idp.s0;
  InitialComponentsReport rep;
  rep.decomp = decompose(initial_q(idp, params, grid), s0, trap.K0);
  rep.status = check_membership(rep.decomp, s0, trap);
  rep.q2_ratio = std::abs(rep.decomp.q2) / (std::log(s0) / (s0 * s0));
  rep.minus_const = seminorm_minus(rep.decomp) * s0 * s0;
  rep.qe_ratio = sup_norm(rep.decomp.q_e) * std::sqrt(s0);
  const double box = trap.A / (s0 * s0);
  rep.boundary_gap = std::max(std::abs(std::abs(rep.decomp.q0) / box - 1.0),
                              std::abs(std::abs(rep.decomp.q1) / box - 1.0));
  rep.strict = rep.status.margins[2] > 0.0 && rep.status.margins[3] > 0.0 &&
               rep.status.margins[4] > 0.0;
  return rep;
}

CornerSignature evaluate_corner(double d0, double d1, double s0, const SolverConfig& cfg,
                                const ModelParams& params, const TrapParams& trap,
                                const ShootOptions& opts, TrajectoryResult* keep) {
  CornerSignature sig;
  sig.d0 = d0;
  sig.d1 = d1;
  const Field q = initial_q({d0, d1, s0}, params, cfg.grid);
  TrajectoryResult run = run_trajectory(q, s0, s0 + opts.run_window, cfg, params, trap);
  sig.exit = run.exit;
  if (run.exit.reason == ExitReason::Trap) {
    const StepRecord& last = run.record.steps.back();
    const double scale = last.s * last.s / trap.A;
    for (int m = 0; m < 2; ++m) {
      sig.scaled_modes[m] = last.modes[m] * scale;
      if (std::abs(sig.scaled_modes[m]) >= opts.sign_floor) {
        sig.signs[m] = sig.scaled_modes[m] > 0.0 ? 1 : -1;
      }
    }
    if (run.exit.expanding()) {
      sig.signs[run.exit.mode] = run.exit.omega;
    } else {
      sig.foreign = true;
    }
  } else if (run.exit.reason == ExitReason::Divergence) {
    sig.foreign = true;
  }
  if (keep) *keep = std::move(run);
  return sig;
}

namespace {

double exit_time(const CornerSignature& c, double s_window_end) {
  return c.exit.exited() ? c.exit.s_exit : s_window_end;
}

// Expected sign pattern at corner k (0 LL, 1 LR, 2 UL, 3 UR).
std::array<int, 2> expected_signs(int k, const ModeMap& map) {
  const int s0 = (k & 1) ? 1 : -1;
  const int s1 = (k & 2) ? 1 : -1;
  return {map.a0 > 0.0 ? s0 : -s0, map.a1 > 0.0 ? s1 : -s1};
}

// -1 when a decided sign contradicts the pattern, else the number of decided matches.
int enclosure_score(const std::array<CornerSignature, 4>& corners, const ModeMap& map) {
  int score = 0;
  for (int k = 0; k < 4; ++k) {
    const CornerSignature& c = corners[static_cast<std::size_t>(k)];
    if (c.foreign) return -1;
    if (!c.exit.exited()) continue;
    const auto want = expected_signs(k, map);
    for (int m = 0; m < 2; ++m) {
      if (c.signs[m] == 0) continue;
      if (c.signs[m] != want[m]) return -1;
      ++score;
    }
  }
  return score;
}

std::string describe(std::initializer_list<std::pair<const char*, const CornerSignature*>> pts) {
  std::string out;
  for (const auto& [name, c] : pts) {
    out += fmt::format("{}(d0={:.17g}, d1={:.17g}): ", name, c->d0, c->d1);
    if (!c->exit.exited()) {
      out += "no exit; ";
    } else if (c->exit.reason == ExitReason::Divergence) {
      out += fmt::format("diverged at s={}; ", c->exit.s_exit);
    } else {
      out += fmt::format("exit via {} at s={:.4f} signs ({:+d},{:+d}); ",
                         component_name(*c->exit.violated), c->exit.s_exit, c->signs[0],
                         c->signs[1]);
    }
  }
  return out;
}

std::string describe(const std::array<CornerSignature, 4>& c) {
  return describe({{"LL", &c[0]}, {"LR", &c[1]}, {"UL", &c[2]}, {"UR", &c[3]}});
}

}  // namespace

ShootResult shoot(const SolverConfig& cfg, const ModelParams& params, const TrapParams& trap,
                  double s0, const ShootOptions& opts) {
  ShootResult res;
  res.map = initial_mode_map(s0, params, cfg.grid, trap);
  const ModeMap& map = res.map;
  const double s_last = s0 + opts.run_window;
  std::array<double, 4> rect{map.d0_lo, map.d0_hi, map.d1_lo, map.d1_hi};

  auto eval_batch = [&](const std::vector<std::array<double, 2>>& pts,
                        std::vector<CornerSignature>& sigs, std::vector<TrajectoryResult>& runs) {
    sigs.assign(pts.size(), {});
    runs.assign(pts.size(), {});
    parallel_for(pts.size(), opts.threads, [&](std::size_t i) {
      sigs[i] = evaluate_corner(pts[i][0], pts[i][1], s0, cfg, params, trap, opts, &runs[i]);
    });
    for (std::size_t i = 0; i < sigs.size(); ++i) {
      res.best_exit = std::max(res.best_exit, exit_time(sigs[i], s_last));
    }
    for (std::size_t i = 0; i < sigs.size(); ++i) {
      if (!sigs[i].exit.exited()) {
        res.d0 = pts[i][0];
        res.d1 = pts[i][1];
        res.survived = true;
        res.central = std::move(runs[i]);
        return true;
      }
    }
    return false;
  };

  std::vector<CornerSignature> sigs;
  std::vector<TrajectoryResult> runs;
  std::array<CornerSignature, 4> corners;
  {
    const std::vector<std::array<double, 2>> pts{
        {rect[0], rect[2]}, {rect[1], rect[2]}, {rect[0], rect[3]}, {rect[1], rect[3]}};
    if (eval_batch(pts, sigs, runs)) return res;
    std::copy(sigs.begin(), sigs.end(), corners.begin());
    ShootLevel lvl;
    lvl.depth = 0;
    lvl.rect = rect;
    lvl.corners = corners;
    lvl.min_corner_exit = s_last;
    for (const auto& c : corners) lvl.min_corner_exit = std::min(lvl.min_corner_exit, exit_time(c, s_last));
    if (enclosure_score(corners, map) < 0) {
      throw EnclosureBroken("enclosure broken on the initial rectangle: " + describe(corners), lvl);
    }
    res.history.push_back(lvl);
  }

  for (int depth = 1; depth <= opts.max_levels; ++depth) {
    const double mid0 = 0.5 * (rect[0] + rect[1]);
    const double mid1 = 0.5 * (rect[2] + rect[3]);
    if (!(mid0 > rect[0] && mid0 < rect[1]) || !(mid1 > rect[2] && mid1 < rect[3])) break;

    // Center, bottom, top, left, right.
    const std::vector<std::array<double, 2>> pts{
        {mid0, mid1}, {mid0, rect[2]}, {mid0, rect[3]}, {rect[0], mid1}, {rect[1], mid1}};
    if (eval_batch(pts, sigs, runs)) {
      res.levels = depth;
      return res;
    }
    const CornerSignature &C = sigs[0], &Bm = sigs[1], &Tm = sigs[2], &Lm = sigs[3], &Rm = sigs[4];
    const std::array<std::array<CornerSignature, 4>, 4> subs{{
        {corners[0], Bm, Lm, C},
        {Bm, corners[1], C, Rm},
        {Lm, C, corners[2], Tm},
        {C, Rm, Tm, corners[3]},
    }};
    const std::array<std::array<double, 4>, 4> sub_rects{{
        {rect[0], mid0, rect[2], mid1},
        {mid0, rect[1], rect[2], mid1},
        {rect[0], mid0, mid1, rect[3]},
        {mid0, rect[1], mid1, rect[3]},
    }};
    int best = -1;
    int best_score = -1;
    for (int k = 0; k < 4; ++k) {
      const int sc = enclosure_score(subs[static_cast<std::size_t>(k)], map);
      if (sc > best_score) {
        best_score = sc;
        best = k;
      }
    }
    ShootLevel lvl;
    lvl.depth = depth;
    lvl.rect = rect;
    lvl.corners = corners;
    if (best < 0) {
      // Past the first split a broken pattern means the exit signs have sunk
      // into round-off; keep the last consistent rectangle.
      res.broken_at = depth;
      res.break_detail = fmt::format("enclosure broken at depth {}: ", depth) + describe(corners) +
                         describe({{"C", &C}, {"B", &Bm}, {"T", &Tm}, {"L", &Lm}, {"R", &Rm}});
      break;
    }
    rect = sub_rects[static_cast<std::size_t>(best)];
    corners = subs[static_cast<std::size_t>(best)];
    lvl.chosen = best;
    lvl.min_corner_exit = s_last;
    for (const auto& c : corners) lvl.min_corner_exit = std::min(lvl.min_corner_exit, exit_time(c, s_last));
    res.history.push_back(lvl);
    res.levels = depth;
  }

  res.d0 = 0.5 * (rect[0] + rect[1]);
  res.d1 = 0.5 * (rect[2] + rect[3]);
  evaluate_corner(res.d0, res.d1, s0, cfg, params, trap, opts, &res.central);
  res.survived = !res.central.exit.exited();
  if (res.central.exit.exited()) res.best_exit = std::max(res.best_exit, res.central.exit.s_exit);
  return res;
}

}  // namespace blowup
