#pragma once

#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "blowup/hermite.hpp"
#include "blowup/model.hpp"
#include "blowup/semigroup.hpp"
#include "blowup/trajectory.hpp"
#include "blowup/trapset.hpp"

namespace blowup {

enum class Scheme { SemigroupSplit, ImexCN };
enum class BoundaryCondition { DirichletProfile, Extrapolation };

std::string_view scheme_name(Scheme s);
std::string_view bc_name(BoundaryCondition b);

struct SolverConfig {
  double ds = 0.01;
  Scheme scheme = Scheme::SemigroupSplit;
  Grid grid;
  BoundaryCondition bc = BoundaryCondition::Extrapolation;
  double s0 = 20.0;
  double s_end = 50.0;
};

/// Throws std::invalid_argument unless ds > 0, s_end > s0 and the grid is symmetric.
void validate(const SolverConfig& cfg);

/// Which right-hand-side terms of the q-equation are active. Switching terms
/// off is for diagnostics and tests only.
struct TermMask {
  bool V = true;
  bool B = true;
  bool R = true;
  bool N = true;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double s, const std::string& what) : std::runtime_error(what), s_(s) {}
  double s() const noexcept { return s_; }

 private:
  double s_;
};

/// Pointwise values of the q-equation forcing at one time.
struct TermFields {
  Field Vq;
  Field B;
  Field R;
  Field N;
};

/// Strang splitting for the self-similar equations. The linear factor is the
/// exact kernel (or Crank-Nicolson for imex-cn); the rest is advanced by two
/// explicit-midpoint half steps around it.
///
/// q-form: linear part L, explicit part V q + B + R + N.
/// w-form: linear part L - 1 (which fixes constants), explicit part
///         |w|^{p-1} w - w/(p-1) + N, so w = kappa is an exact fixed point.
class SelfSimSolver {
 public:
  SelfSimSolver(const SolverConfig& cfg, const ModelParams& params, TermMask mask = {});
  ~SelfSimSolver();
  SelfSimSolver(SelfSimSolver&&) noexcept;
  SelfSimSolver& operator=(SelfSimSolver&&) noexcept;

  const SolverConfig& config() const { return cfg_; }
  const ModelParams& params() const { return params_; }

  /// Advance by config().ds from time s, in place.
  void advance_q(std::vector<double>& q, double s) const;
  void advance_w(std::vector<double>& w, double s) const;

  Field step_q(const Field& q, double s) const;
  Field step_w(const Field& w, double s) const;

  /// V q, B, R and N on the grid at time s.
  TermFields terms(const Field& q, double s) const;
  /// Sup norms of B, R and N at time s without building the fields.
  std::array<double, 3> term_sups(std::span<const double> q, double s) const;

  /// Imposes the boundary condition on q at time s.
  void apply_bc_q(std::vector<double>& q, double s) const;
  void apply_bc_w(std::vector<double>& w, double s) const;

 private:
  struct Frame;
  struct Workspace;
  const Frame& frame(double t, int slot) const;
  void fill_frame(Frame& fr, double t) const;
  void rhs_q(const std::vector<double>& q, const Frame& fr, std::vector<double>& out) const;
  void rhs_w(const std::vector<double>& w, double t, std::vector<double>& out) const;
  void linear(std::vector<double>& v, double shift) const;
  void check_finite(const std::vector<double>& v, double s) const;

  SolverConfig cfg_;
  ModelParams params_;
  TermMask mask_;
  std::vector<double> y_;
  std::unique_ptr<SemigroupOperator> kernel_;
  // Crank-Nicolson tridiagonal coefficients (imex-cn only), for shift 0.
  std::vector<double> cn_lower_, cn_diag_, cn_upper_;
  // Per-instance scratch; a solver must not be shared between threads.
  std::unique_ptr<Workspace> ws_;
};

Field step_w(const Field& w, double s, double ds, SolverConfig cfg, const ModelParams& params);
Field step_q(const Field& q, double s, double ds, SolverConfig cfg, const ModelParams& params);

struct RunOptions {
  int continuation_steps = 2;
  int snapshot_every = 0;     ///< 0: no snapshots
  double divergence_cap = 1e3;  ///< |q| beyond this counts as divergence
  bool stop_on_exit = true;
  TermMask mask;
};

struct TrajectoryResult {
  TrajectoryRecord record;
  ExitInfo exit;
  Field final_q;
  /// Set when the run stopped on divergence, also after an earlier trap exit.
  bool diverged = false;
  double s_diverged = 0.0;
};

/// Integrates the q-equation from s0 to s_end, stopping at the first exit from
/// V_A(s) (or continuing past it when stop_on_exit is false).
TrajectoryResult run_trajectory(const Field& q_init, double s0, double s_end,
                                const SolverConfig& cfg, const ModelParams& params,
                                const TrapParams& trap, const RunOptions& opts = {});

struct ModeOdeReport {
  std::array<double, 2> constants{};  ///< sup s^2 |q_m' - (1 - m/2) q_m|, m = 0, 1
  double constant = 0.0;              ///< max of the two
  double s_from = 0.0;
  double s_to = 0.0;
};

/// Centered differences in s over the recorded rows; needs >= 10 rows.
ModeOdeReport mode_ode_check(const TrajectoryRecord& record);

struct DuhamelReport {
  double tau = 0.0;
  double s = 0.0;
  double C_delta2 = 0.0;       ///< |delta_2| s^3 / (s - tau)
  double C_delta_minus = 0.0;  ///< sup |delta_-|/(1+|y|^3) s^3 / (s - tau)
  double C_delta_e = 0.0;      ///< ||delta_e|| s^3 / (s - tau)
  double C_comparison = 0.0;   ///< sup of the positive-kernel bound, times s^3/(s - tau)
  /// ||alpha + beta + gamma + delta - q(s)||_inf, with beta built from V q + B.
  double closure_residual = 0.0;
  double q_sup = 0.0;
};

/// Duhamel split of q(s) from stored snapshots between tau and s.
DuhamelReport duhamel_split_check(const TrajectoryRecord& record, double tau, double s);

}  // namespace blowup
