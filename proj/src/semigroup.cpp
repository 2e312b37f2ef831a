#include "blowup/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace blowup {

namespace {

// exp(-d^2/v) < 1e-20 beyond this many sqrt(v).
constexpr double kBandWidth = 6.8;

}  // namespace

double kernel_eval(double theta, double y, double x) {
  const double one_minus = -std::expm1(-theta);
  const double d = y * std::exp(-0.5 * theta) - x;
  return std::exp(theta) / std::sqrt(4.0 * std::numbers::pi * one_minus) *
         std::exp(-d * d / (4.0 * one_minus));
}

SemigroupOperator::SemigroupOperator(double theta, const Grid& grid)
    : theta_(theta), grid_(grid) {
  if (!(theta > 0.0)) throw std::invalid_argument("SemigroupOperator needs theta > 0");
  const std::size_t n = grid.size();
  const double v = -4.0 * std::expm1(-theta);
  const double norm = std::exp(theta) / std::sqrt(std::numbers::pi * v) * grid.dy;
  const double shrink = std::exp(-0.5 * theta);
  const double reach = kBandWidth * std::sqrt(v);
  const long last = static_cast<long>(n) - 1;

  row_begin_.resize(n);
  row_offset_.resize(n);
  row_len_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = grid.node(i) * shrink;
    const long j0 = static_cast<long>(std::floor((c - reach - grid.lo()) / grid.dy));
    const long j1 = static_cast<long>(std::ceil((c + reach - grid.lo()) / grid.dy));
    const long a = std::clamp(j0, 0L, last);
    const long b = std::clamp(j1, 0L, last);
    row_begin_[i] = static_cast<std::size_t>(a);
    row_len_[i] = static_cast<std::size_t>(b - a + 1);
    row_offset_[i] = weights_.size();
    weights_.resize(weights_.size() + row_len_[i], 0.0);
    double* w = weights_.data() + row_offset_[i];
    for (long j = j0; j <= j1; ++j) {
      const double x = grid.lo() + static_cast<double>(j) * grid.dy;
      const double d = c - x;
      const double k = norm * std::exp(-d * d / v);
      const long jj = std::clamp(j, 0L, last);
      w[jj - a] += k;
    }
  }
}

void SemigroupOperator::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = grid_.size();
  if (in.size() != n || out.size() != n) throw GridError("grid mismatch in semigroup apply");
  for (std::size_t i = 0; i < n; ++i) {
    const double* w = weights_.data() + row_offset_[i];
    const double* f = in.data() + row_begin_[i];
    const std::size_t len = row_len_[i];
    // Four fixed-order partial sums: vectorizes, and stays deterministic.
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= len; k += 4) {
      a0 += w[k] * f[k];
      a1 += w[k + 1] * f[k + 1];
      a2 += w[k + 2] * f[k + 2];
      a3 += w[k + 3] * f[k + 3];
    }
    for (; k < len; ++k) a0 += w[k] * f[k];
    out[i] = (a0 + a1) + (a2 + a3);
  }
}

Field SemigroupOperator::apply(const Field& f) const {
  if (!(f.grid == grid_)) throw GridError("grid mismatch in semigroup apply");
  Field out(grid_, f.s);
  apply(f.values, out.values);
  return out;
}

Field apply_semigroup(double theta, const Field& f) {
  if (theta == 0.0) return f;
  return SemigroupOperator(theta, f.grid).apply(f);
}

SmoothingReport verify_smoothing(double theta, std::span<const Field> sample_fields) {
  SmoothingReport rep;
  rep.theta = theta;
  if (sample_fields.empty()) return rep;
  const SemigroupOperator op(theta, sample_fields.front().grid);
  const double growth = std::exp(0.5 * theta);
  const double smooth = std::sqrt(-std::expm1(-theta));
  for (const Field& r : sample_fields) {
    const Field out = r.grid == op.grid() ? op.apply(r) : apply_semigroup(theta, r);
    const double grad_out = sup_norm(gradient(out.values, out.grid.dy));
    const double grad_in = sup_norm(gradient(r.values, r.grid.dy));
    const double val_in = sup_norm(r);
    if (grad_in > 0.0) {
      rep.gradient_ratio = std::max(rep.gradient_ratio, grad_out / (growth * grad_in));
    }
    if (val_in > 0.0) {
      rep.value_ratio = std::max(rep.value_ratio, grad_out * smooth / (growth * val_in));
    }
  }
  return rep;
}

Field duhamel_integral(std::span<const double> taus, std::span<const Field> integrand, double s) {
  if (taus.size() != integrand.size() || taus.empty()) {
    throw std::invalid_argument("duhamel_integral: need matching, non-empty nodes and fields");
  }
  const Grid grid = integrand.front().grid;
  Field acc(grid, s);
  if (taus.size() == 1) return acc;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const double left = k == 0 ? 0.0 : taus[k] - taus[k - 1];
    const double right = k + 1 == taus.size() ? 0.0 : taus[k + 1] - taus[k];
    const double w = 0.5 * (left + right);
    const double theta = s - taus[k];
    const Field moved = theta > 0.0 ? apply_semigroup(theta, integrand[k]) : integrand[k];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * moved[i];
  }
  return acc;
}

KernelComparisonReport kernel_comparison_check(double s, double sigma,
                                               const std::function<Field(double)>& field_N,
                                               int nodes) {
  if (!(s > sigma)) throw std::invalid_argument("kernel_comparison_check needs s > sigma");
  nodes = std::max(nodes, 2);
  std::vector<double> taus(static_cast<std::size_t>(nodes));
  std::vector<Field> absN;
  absN.reserve(taus.size());
  for (int k = 0; k < nodes; ++k) {
    taus[k] = k + 1 == nodes ? s : sigma + (s - sigma) * k / (nodes - 1);
    Field f = field_N(taus[k]);
    for (double& v : f.values) v = std::abs(v);
    absN.push_back(std::move(f));
  }
  const Field bound = duhamel_integral(taus, absN, s);
  KernelComparisonReport rep;
  rep.s = s;
  rep.sigma = sigma;
  rep.sup_bound = sup_norm(bound);
  rep.envelope = (s - sigma) / (s * s * s);
  rep.ratio = rep.sup_bound / rep.envelope;
  return rep;
}

}  // namespace blowup
