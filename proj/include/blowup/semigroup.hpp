#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "blowup/hermite.hpp"

namespace blowup {

/// Kernel of exp(theta L), L = d^2/dy^2 - (y/2) d/dy + 1:
///   e^theta / sqrt(4 pi (1 - e^-theta)) exp(-(y e^{-theta/2} - x)^2 / (4 (1 - e^-theta))).
double kernel_eval(double theta, double y, double x);

/// exp(theta L) on one grid as a banded quadrature matrix. Values beyond the
/// grid ends are taken equal to the nearest boundary value, so constants map
/// to e^theta times themselves up to trapezoid error.
class SemigroupOperator {
 public:
  SemigroupOperator(double theta, const Grid& grid);

  double theta() const { return theta_; }
  const Grid& grid() const { return grid_; }

  void apply(std::span<const double> in, std::span<double> out) const;
  Field apply(const Field& f) const;

 private:
  double theta_;
  Grid grid_;
  std::vector<std::size_t> row_begin_;
  std::vector<std::size_t> row_offset_;
  std::vector<std::size_t> row_len_;
  std::vector<double> weights_;
};

/// y -> integral of kernel(theta, y, x) f(x) dx. theta = 0 is the identity.
Field apply_semigroup(double theta, const Field& f);

struct SmoothingReport {
  double theta = 0.0;
  /// max over samples of ||(e^{theta L} r)'|| / (e^{theta/2} ||r'||)
  double gradient_ratio = 0.0;
  /// max over samples of ||(e^{theta L} r)'|| sqrt(1 - e^-theta) / (e^{theta/2} ||r||)
  double value_ratio = 0.0;
};

SmoothingReport verify_smoothing(double theta, std::span<const Field> sample_fields);

/// Trapezoid-in-time Duhamel integral sum_k w_k exp((s - tau_k) L) g_k with
/// tau_0 < ... < tau_last = s.
Field duhamel_integral(std::span<const double> taus, std::span<const Field> integrand, double s);

struct KernelComparisonReport {
  double s = 0.0;
  double sigma = 0.0;
  double sup_bound = 0.0;  ///< sup_y of the integral of exp((s-tau)L)|N(tau)|
  double envelope = 0.0;   ///< (s - sigma) / s^3
  double ratio = 0.0;      ///< sup_bound / envelope, the empirical constant
};

/// Bounds the Duhamel increment of N over [sigma, s] through the positive
/// kernel, with `nodes` time-quadrature nodes (>= 2).
KernelComparisonReport kernel_comparison_check(double s, double sigma,
                                               const std::function<Field(double)>& field_N,
                                               int nodes = 21);

}  // namespace blowup
