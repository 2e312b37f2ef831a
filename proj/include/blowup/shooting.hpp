#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/hermite.hpp"
#include "blowup/model.hpp"
#include "blowup/selfsim_solver.hpp"
#include "blowup/trapset.hpp"

namespace blowup {

struct InitialDataParams {
  double d0 = 0.0;
  double d1 = 0.0;
  double s0 = 20.0;  ///< -log T
};

/// q(y, s0) = f(y/sqrt(s0))^p (d0 + d1 y/sqrt(s0)) - kappa/(2 p s0).
Field initial_q(const InitialDataParams& idp, const ModelParams& params, const Grid& grid);

/// q_m(s0) = a_m d_m + b_m for m = 0, 1, and the rectangle D_T mapped onto
/// the box [-A/s0^2, A/s0^2]^2.
struct ModeMap {
  double s0 = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
  double b0 = 0.0;  ///< q0 of the (0,0) data
  double b1 = 0.0;
  double cross01 = 0.0;  ///< change of q1 per unit d0
  double cross10 = 0.0;  ///< change of q0 per unit d1
  double d0_lo = 0.0, d0_hi = 0.0;
  double d1_lo = 0.0, d1_hi = 0.0;
};

class DegenerateMapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ModeMap initial_mode_map(double s0, const ModelParams& params, const Grid& grid,
                         const TrapParams& trap);

struct InitialComponentsReport {
  SpectralDecomp decomp;
  TrapStatus status;
  double q2_ratio = 0.0;     ///< |q2| / (log s0 / s0^2)
  double minus_const = 0.0;  ///< seminorm_minus * s0^2
  double qe_ratio = 0.0;     ///< ||q_e|| sqrt(s0)
  /// max over m = 0, 1 of | |q_m| s0^2 / A - 1 |, zero exactly on a corner
  double boundary_gap = 0.0;
  bool strict = false;  ///< q2, q_minus and q_e margins all strictly positive
};

InitialComponentsReport initial_components_check(const InitialDataParams& idp,
                                                 const ModelParams& params, const Grid& grid,
                                                 const TrapParams& trap);

struct ShootOptions {
  double run_window = 30.0;
  int max_levels = 64;
  /// A non-exiting mode counts as signed only if |q_m| s^2 / A reaches this.
  double sign_floor = 1e-6;
  int threads = 1;
};

/// Exit data of one (d0, d1) run, reduced to signs.
struct CornerSignature {
  double d0 = 0.0;
  double d1 = 0.0;
  ExitInfo exit;
  std::array<double, 2> scaled_modes{};  ///< q_m(s_exit) s_exit^2 / A
  std::array<int, 2> signs{};            ///< -1, +1, or 0 when undecided
  bool foreign = false;                  ///< exited through q2, q_minus, q_e or diverged
};

struct ShootLevel {
  int depth = 0;
  std::array<double, 4> rect{};  ///< d0_lo, d0_hi, d1_lo, d1_hi
  std::array<CornerSignature, 4> corners;  ///< LL, LR, UL, UR
  int chosen = -1;                         ///< sub-rectangle kept: 0 LL, 1 LR, 2 UL, 3 UR
  double min_corner_exit = 0.0;
};

struct ShootResult {
  double d0 = 0.0;
  double d1 = 0.0;
  bool survived = false;  ///< a run stayed in V_A(s) over the whole window
  double best_exit = 0.0;  ///< largest exit time seen (s0 + window for a survivor)
  int levels = 0;
  ModeMap map;
  std::vector<ShootLevel> history;
  TrajectoryResult central;  ///< run at (d0, d1)
  int broken_at = 0;         ///< depth at which refinement stopped on a broken pattern, or 0
  std::string break_detail;
};

class EnclosureBroken : public std::runtime_error {
 public:
  EnclosureBroken(const std::string& what, ShootLevel level)
      : std::runtime_error(what), level_(std::move(level)) {}
  const ShootLevel& level() const { return level_; }

 private:
  ShootLevel level_;
};

/// Runs one (d0, d1) trajectory over [s0, s0 + window] and reduces it to a signature.
CornerSignature evaluate_corner(double d0, double d1, double s0, const SolverConfig& cfg,
                                const ModelParams& params, const TrapParams& trap,
                                const ShootOptions& opts, TrajectoryResult* keep = nullptr);

/// Quadrisection of D_T guided by exit signs. Stops when a run survives the
/// window, the rectangle can no longer be split, or (below depth 0) no
/// sub-rectangle keeps a consistent sign pattern; (d0, d1) is then the centre
/// of the last consistent rectangle. Throws EnclosureBroken when the initial
/// corners already contradict the expected pattern.
ShootResult shoot(const SolverConfig& cfg, const ModelParams& params, const TrapParams& trap,
                  double s0, const ShootOptions& opts = {});

}  // namespace blowup
