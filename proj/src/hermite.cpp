#include "blowup/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/core.h>

namespace blowup {

std::vector<double> Grid::nodes() const {
  std::vector<double> y(size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = node(i);
  return y;
}

Grid make_grid(double half_width_min, double dy) {
  if (!(dy > 0.0) || !(half_width_min > 0.0)) {
    throw GridError(fmt::format("invalid grid: half width {} and spacing {}", half_width_min, dy));
  }
  Grid g;
  g.dy = dy;
  g.half_count = static_cast<std::size_t>(std::ceil(half_width_min / dy - 1e-9));
  return g;
}

Grid default_grid(double K0, double s_max, double dy) {
  return make_grid(std::max(20.0, 2.0 * K0 * std::sqrt(s_max) + 5.0), dy);
}

Field sample(const Grid& grid, const std::function<double(double)>& fn, double s) {
  Field f(grid, s);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(grid.node(i));
  return f;
}

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double sup_norm(const Field& f) { return sup_norm(std::span<const double>(f.values)); }

std::vector<double> gradient(std::span<const double> v, double dy) {
  const std::size_t n = v.size();
  std::vector<double> g(n, 0.0);
  if (n < 3) return g;
  const double inv2 = 0.5 / dy;
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (v[i + 1] - v[i - 1]) * inv2;
  g[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2;
  g[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2;
  return g;
}

Field gradient(const Field& f) {
  return Field(f.grid, gradient(std::span<const double>(f.values), f.grid.dy), f.s);
}

double weight_rho(double y) {
  return std::exp(-0.25 * y * y) / std::sqrt(4.0 * std::numbers::pi);
}

double hermite_h(int m, double y) {
  if (m < 0) throw std::invalid_argument("hermite_h: negative degree");
  if (m == 0) return 1.0;
  double prev = 1.0;
  double cur = y;
  for (int k = 1; k < m; ++k) {
    const double next = y * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double hermite_norm_sq(int m) {
  double v = 1.0;
  for (int k = 1; k <= m; ++k) v *= 2.0 * k;
  return v;
}

namespace {

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw GridError("grid mismatch between fields");
}

double trapezoid_weight(const Grid& g, std::size_t i) {
  return (i == 0 || i + 1 == g.size()) ? 0.5 * g.dy : g.dy;
}

}  // namespace

double inner_rho(const Field& f, const Field& g) {
  require_same_grid(f.grid, g.grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    acc += trapezoid_weight(f.grid, i) * weight_rho(f.grid.node(i)) * f[i] * g[i];
  }
  return acc;
}

double norm_rho(const Field& f) { return std::sqrt(inner_rho(f, f)); }

Field apply_L_fd(const Field& f) {
  Field out(f.grid, f.s);
  const double dy = f.grid.dy;
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    const double y = f.grid.node(i);
    const double d2 = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dy * dy);
    const double d1 = (f[i + 1] - f[i - 1]) / (2.0 * dy);
    out[i] = d2 - 0.5 * y * d1 + f[i];
  }
  return out;
}

double cutoff_chi0(double r, CutoffShape shape) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  if (shape == CutoffShape::Bridge) {
    const double t = r - 1.0;
    return std::exp(1.0 - 1.0 / (1.0 - t * t));
  }
  const auto g = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = g(2.0 - r);
  const double b = g(r - 1.0);
  return a / (a + b);
}

double cutoff_chi(double y, double s, double K0, CutoffShape shape) {
  return cutoff_chi0(std::abs(y) / (K0 * std::sqrt(s)), shape);
}

SpectralProjector::SpectralProjector(const Grid& grid, CutoffShape shape)
    : grid_(grid), shape_(shape), weight_(grid.size()) {
  if (!grid.symmetric()) throw GridError("spectral projection needs a grid centred at 0");
  for (auto& h : h_) h.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double y = grid.node(i);
    weight_[i] = trapezoid_weight(grid, i) * weight_rho(y);
    h_[0][i] = 1.0;
    h_[1][i] = y;
    h_[2][i] = y * y - 2.0;
  }
}

void SpectralProjector::check_width(double s, double K0) const {
  if (!(s > 0.0) || !(K0 > 0.0)) {
    throw GridError(fmt::format("decompose needs s > 0 and K0 > 0 (got s={}, K0={})", s, K0));
  }
  const double need = 2.0 * K0 * std::sqrt(s);
  if (need > grid_.half_width() + 1e-12) {
    throw GridError(fmt::format("grid too narrow: half width {} < 2 K0 sqrt(s) = {}",
                                grid_.half_width(), need));
  }
}

double SpectralProjector::project(std::span<const double> f, int m) const {
  const auto& h = h_.at(static_cast<std::size_t>(m));
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += weight_[i] * f[i] * h[i];
  return acc / hermite_norm_sq(m);
}

SpectralDecomp SpectralProjector::decompose(const Field& q, double s, double K0) const {
  require_same_grid(q.grid, grid_);
  check_width(s, K0);
  const std::size_t n = grid_.size();
  std::vector<double> qb(n);
  SpectralDecomp d;
  d.K0 = K0;
  d.s = s;
  d.q_e = Field(grid_, s);
  for (std::size_t i = 0; i < n; ++i) {
    const double chi = cutoff_chi(grid_.node(i), s, K0, shape_);
    qb[i] = q[i] * chi;
    d.q_e[i] = q[i] - qb[i];
  }
  d.q0 = project(qb, 0);
  d.q1 = project(qb, 1);
  d.q2 = project(qb, 2);
  d.q_minus = Field(grid_, s);
  for (std::size_t i = 0; i < n; ++i) {
    d.q_minus[i] = qb[i] - d.q0 * h_[0][i] - d.q1 * h_[1][i] - d.q2 * h_[2][i];
  }
  return d;
}

ModeSummary SpectralProjector::summarize(std::span<const double> q, double s, double K0) const {
  if (q.size() != grid_.size()) throw GridError("grid mismatch between field and projector");
  check_width(s, K0);
  const std::size_t n = grid_.size();
  const double inner = K0 * std::sqrt(s);
  const double outer = 2.0 * inner;

  // Only nodes with |y| < outer carry q_b; chi = 1 on |y| <= inner.
  std::array<double, 3> acc{};
  double qe_sup = 0.0;
  std::vector<double> qb(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = grid_.node(i);
    const double ay = std::abs(y);
    double chi = 1.0;
    if (ay >= outer) {
      chi = 0.0;
    } else if (ay > inner) {
      chi = cutoff_chi0(ay / inner, shape_);
    }
    const double b = q[i] * chi;
    qb[i] = b;
    qe_sup = std::max(qe_sup, std::abs(q[i] - b));
    const double wb = weight_[i] * b;
    acc[0] += wb;
    acc[1] += wb * h_[1][i];
    acc[2] += wb * h_[2][i];
  }
  ModeSummary out;
  out.s = s;
  for (int m = 0; m < 3; ++m) out.modes[m] = acc[m] / hermite_norm_sq(m);
  double semi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = grid_.node(i);
    const double ay = std::abs(y);
    if (ay > outer) continue;
    const double qm = qb[i] - out.modes[0] - out.modes[1] * h_[1][i] - out.modes[2] * h_[2][i];
    semi = std::max(semi, std::abs(qm) / (1.0 + ay * ay * ay));
  }
  out.minus_seminorm = semi;
  out.qe_sup = qe_sup;
  return out;
}

SpectralDecomp decompose(const Field& q, double s, double K0, CutoffShape shape) {
  return SpectralProjector(q.grid, shape).decompose(q, s, K0);
}

double seminorm_minus(const SpectralDecomp& d) {
  const double outer = 2.0 * d.K0 * std::sqrt(d.s);
  double semi = 0.0;
  const Grid& g = d.q_minus.grid;
  for (std::size_t i = 0; i < d.q_minus.size(); ++i) {
    const double ay = std::abs(g.node(i));
    if (ay > outer) continue;
    semi = std::max(semi, std::abs(d.q_minus[i]) / (1.0 + ay * ay * ay));
  }
  return semi;
}

Field reconstruct(const SpectralDecomp& d) {
  Field out(d.q_minus.grid, d.s);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double y = out.grid.node(i);
    out[i] = d.q0 + d.q1 * y + d.q2 * (y * y - 2.0) + d.q_minus[i] + d.q_e[i];
  }
  return out;
}

}  // namespace blowup
