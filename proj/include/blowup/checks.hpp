#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "blowup/hermite.hpp"
#include "blowup/model.hpp"
#include "blowup/selfsim_solver.hpp"
#include "blowup/shooting.hpp"
#include "blowup/trajectory.hpp"
#include "blowup/trapset.hpp"

// Measurements behind the experiment reports. Each returns raw numbers; the
// pass/fail thresholds live with the callers.
namespace blowup {

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// max over m, n <= m_max of |<h_m, h_n> - 2^m m! delta_mn| / 2^m m!.
double hermite_orthogonality_error(const Grid& grid, int m_max = 5);

struct FdOrderReport {
  std::array<double, 3> dy{};
  /// errors[m][k] = ||L_fd h_m - (1 - m/2) h_m||_rho at spacing dy[k]
  std::vector<std::array<double, 3>> errors;
  /// orders[m][k] = log2(errors[m][k] / errors[m][k+1]); zero where the
  /// stencil is exact (polynomials of degree <= 2)
  std::vector<std::array<double, 2>> orders;
  double min_order = 0.0;  ///< over m >= 3, where the error is not round-off
  double exact_error = 0.0;  ///< largest error for m <= 2
};

FdOrderReport fd_eigen_order(double dy, double y_max, int m_max = 5);

/// max over `points` nodes in [-z_max, z_max] of |residual| divided by the
/// sum of the magnitudes of its three terms.
double profile_identity_error(const ModelParams& params, int points = 1000, double z_max = 20.0);

struct DecayFit {
  std::vector<double> s;
  std::vector<double> values;
  double slope = 0.0;
};

/// sup_y |R(y, s)| at each s (sampled in z = y/sqrt(s)) and its log-log slope.
DecayFit remainder_decay(const ModelParams& params, std::span<const double> s_list,
                         double z_max = 40.0, double dz = 0.005);

/// ||e^{theta L} h_m - e^{(1 - m/2) theta} h_m||_rho / ||e^{(1 - m/2) theta} h_m||_rho.
double eigen_action_error(int m, double theta, const Grid& grid);

/// Smooth bounded test fields: a few random Gaussian bumps plus a tanh step.
std::vector<Field> random_smooth_fields(const Grid& grid, int count, std::uint64_t seed);

/// max over fields of ||e^{t1 L} e^{t2 L} f - e^{(t1+t2) L} f||_inf / ||e^{(t1+t2) L} f||_inf,
/// taken over |y| <= y_inner to stay clear of boundary truncation.
double composition_error(double t1, double t2, std::span<const Field> fields, double y_inner);

struct DecayRates {
  double s_from = 0.0;
  double s_to = 0.0;
  double q_slope = 0.0;
  double grad_slope = 0.0;
  double q_scaled_max = 0.0;     ///< max of ||q|| sqrt(s) over the window
  double grad_scaled_max = 0.0;  ///< max of ||grad q|| sqrt(s)
};

/// Log-log slopes of ||q||_inf and ||grad q||_inf over recorded rows with s in [s_from, s_to].
DecayRates trapped_decay(const TrajectoryRecord& record, double s_from, double s_to);

struct ForcingReport {
  double max_N_over_R = 0.0;
  double max_N_s4 = 0.0;  ///< max of ||N|| s^4
  std::size_t rows = 0;
};

ForcingReport forcing_check(const TrajectoryRecord& record, double s_from);

struct WitnessResult {
  ReductionReport report;
  std::vector<CornerSignature> points;  ///< row-major, d1 outer
};

/// Runs an n x n grid of initial data spanning D_T and classifies every exit.
WitnessResult witness_grid(const SolverConfig& cfg, const ModelParams& params,
                           const TrapParams& trap, double s0, int n, const ShootOptions& opts);

struct OdeOracleReport {
  double T_exact = 0.0;
  double T_est = 0.0;
  double T_rel_err = 0.0;
  /// max relative deviation from ((p-1)(T-t))^{-1/(p-1)} while ||u|| <= u_cap
  double path_rel_err = 0.0;
  double fit_quality = 0.0;
};

/// Space-homogeneous u0 = c with no forcing, against u' = u^p.
OdeOracleReport homogeneous_oracle(double p, double c, double u_cap = 1e3,
                                   double threshold = 1e8);

}  // namespace blowup
