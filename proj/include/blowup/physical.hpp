#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "blowup/hermite.hpp"
#include "blowup/model.hpp"
#include "blowup/shooting.hpp"

namespace blowup {

enum class PhysicalBoundary {
  FrozenDirichlet,  ///< end values held at their value when the grid was (re)built
  Neumann,          ///< zero flux, mirrored ghost node
};

struct PhysicalConfig {
  Grid grid;  ///< initial x-grid; half_count must be even when zooming
  double dt0 = 1e-3;
  /// dt = min(dt0, lambda ||u||^{1-p}, dx^2/4)
  double lambda = 0.01;
  double blowup_threshold = 1e16;
  double t_budget = 1.0;
  std::size_t max_steps = 20'000'000;
  /// Halve the grid spacing each time ||u|| grows by 2^{2/(p-1)}, keeping the
  /// node count. The centre moves to the peak only if it leaves the inner quarter.
  bool zoom = true;
  int max_zooms = 60;
  PhysicalBoundary boundary = PhysicalBoundary::FrozenDirichlet;
  /// A snapshot is kept each time log ||u|| grows by this much.
  double snapshot_log_step = 0.25;
  /// Extra snapshot times; the step is shortened to land on each exactly.
  std::vector<double> snapshot_times;
};

/// Throws std::invalid_argument on a non-positive step, threshold or budget, or an
/// odd half_count with zooming on.
void validate(const PhysicalConfig& cfg);

struct PhysicalRow {
  double t = 0.0;
  double u_max = 0.0;
  double grad_max = 0.0;
  double argmax = 0.0;
  double dt = 0.0;
  int zoom = 0;
};

struct BlowupEstimate {
  bool blew_up = false;
  double T_est = 0.0;
  double a_est = 0.0;
  /// RMS residual of the linear fit of ||u||^{-(p-1)} against t, relative to
  /// the RMS of the fitted values.
  double fit_quality = 0.0;
  std::size_t fit_points = 0;
  double t_last = 0.0;
  double u_last = 0.0;
  double dx_final = 0.0;
};

struct PhysicalRun {
  std::vector<PhysicalRow> rows;  ///< one per accepted step, plus the initial state
  std::vector<Field> snapshots;   ///< Field::s holds t
  BlowupEstimate est;
  std::size_t steps = 0;
  int zooms = 0;
};

/// x-grid of half width `scale` sqrt(T |log T|), T = e^{-s0}, with 2 half_count + 1 nodes.
Grid physical_grid(double s0, double scale = 10.0, std::size_t half_count = 1000);

/// u0(x) = T^{-1/(p-1)} f(z) (1 + (d0 + d1 z) f(z)^{p-1}), z = x / sqrt(T |log T|).
Field initial_u(const InitialDataParams& idp, const ModelParams& params, const Grid& xgrid);

/// RK4 method of lines with centered differences. Stops at the threshold
/// (blow-up) or at t_budget (no blow-up, a valid outcome).
PhysicalRun integrate_u(const Field& u0, const ModelParams& params, const PhysicalConfig& cfg);

/// w(y) = (T-t)^{1/(p-1)} u(a + y sqrt(T-t), t) on ygrid, by cubic interpolation.
/// Throws GridError if ygrid reaches outside the snapshot's domain.
Field to_selfsim(const Field& u_snapshot, double T, double a, const ModelParams& params,
                 const Grid& ygrid);

struct ProfileErrorRow {
  double t = 0.0;
  double tau = 0.0;     ///< T_est - t
  double s = 0.0;       ///< |log tau|
  double y_max = 0.0;   ///< half width of the compared window
  double e_inf = 0.0;   ///< sup |w - f(y/sqrt(s))|
  double e_grad = 0.0;  ///< sup |d/dy (w - f(y/sqrt(s)))|
  double e = 0.0;       ///< e_inf + e_grad
  double scaled = 0.0;  ///< e sqrt(s)
  double center_ratio = 0.0;  ///< w(0) / kappa
};

struct ProfileErrorCurve {
  std::vector<ProfileErrorRow> rows;
  /// Relative change of scaled error across the window from a least-squares
  /// line in s; positive means growth.
  double trend = 0.0;
  double final_center_ratio = 0.0;
};

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compares rescaled snapshots with the profile on |y| <= y_window. Snapshots
/// taken after ||u|| passed threshold/10 are left out since T_est is fitted
/// there, as are those whose inner half-domain does not cover the window.
/// Throws ProfileError when fewer than `min_points` snapshots remain.
ProfileErrorCurve profile_error(const PhysicalRun& run, const ModelParams& params,
                                double y_window = 20.0, double dy = 0.05,
                                std::size_t min_points = 5);

struct Perturbation {
  double eps = 0.0;     ///< amplitude relative to ||u0||
  double center = 0.0;
  double width = 1.0;
};

/// u0 + eps ||u0|| exp(-((x - center)/width)^2).
Field perturb(const Field& u0, const Perturbation& pert);

struct StabilityEntry {
  Perturbation pert;
  bool blew_up = false;
  double T = 0.0;
  double a = 0.0;
  double dT = 0.0;  ///< |T - T_hat|
  double da = 0.0;  ///< |a - a_hat|
};

struct StabilityReport {
  double T_hat = 0.0;
  double a_hat = 0.0;
  double dx_final = 0.0;
  std::vector<StabilityEntry> entries;
};

/// Runs the base data and every perturbation (in parallel over `threads`).
/// Throws std::runtime_error if the base run does not blow up.
StabilityReport stability_probe(const Field& u0_base, std::span<const Perturbation> perts,
                                const ModelParams& params, const PhysicalConfig& cfg,
                                int threads = 1);

/// True when, ordered by decreasing eps, values never increase; values below
/// `floor` count as zero.
bool shrinks_with_eps(std::vector<std::pair<double, double>> eps_value, double floor);

}  // namespace blowup
