#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blowup {

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform grid with an odd number of nodes, node `half_count` sitting exactly
/// on `center`. Self-similar grids always have center 0.
struct Grid {
  double center = 0.0;
  double dy = 0.05;
  std::size_t half_count = 400;

  std::size_t size() const { return 2 * half_count + 1; }
  double half_width() const { return static_cast<double>(half_count) * dy; }
  double lo() const { return center - half_width(); }
  double hi() const { return center + half_width(); }
  double node(std::size_t i) const {
    return center + (static_cast<double>(i) - static_cast<double>(half_count)) * dy;
  }
  bool symmetric() const { return center == 0.0; }
  std::vector<double> nodes() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Symmetric grid covering at least [-half_width_min, half_width_min].
Grid make_grid(double half_width_min, double dy);

/// Default self-similar grid: y_max = max(20, 2 K0 sqrt(s_max) + 5).
Grid default_grid(double K0, double s_max, double dy = 0.05);

/// A sampled function on a grid at self-similar time s (or physical time t).
struct Field {
  Grid grid;
  std::vector<double> values;
  double s = 0.0;

  Field() = default;
  Field(Grid g, double s_) : grid(g), values(g.size(), 0.0), s(s_) {}
  Field(Grid g, std::vector<double> v, double s_) : grid(g), values(std::move(v)), s(s_) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

Field sample(const Grid& grid, const std::function<double(double)>& fn, double s = 0.0);

double sup_norm(std::span<const double> v);
double sup_norm(const Field& f);
/// Centered differences inside, one-sided second-order stencils at both ends.
std::vector<double> gradient(std::span<const double> v, double dy);
Field gradient(const Field& f);

/// Gaussian weight rho(y) = exp(-y^2/4) / sqrt(4 pi); unit mass.
double weight_rho(double y);

/// Eigenfunctions of L = d^2/dy^2 - (y/2) d/dy + 1 with eigenvalue 1 - m/2,
/// evaluated by h_0 = 1, h_1 = y, h_{m+1} = y h_m - 2m h_{m-1}.
double hermite_h(int m, double y);
/// ||h_m||^2 in L^2_rho, i.e. 2^m m!.
double hermite_norm_sq(int m);

/// Trapezoid approximation of the integral of f g rho over the grid.
double inner_rho(const Field& f, const Field& g);
double norm_rho(const Field& f);

/// L applied by second-order centered differences; the two boundary nodes are
/// set to zero.
Field apply_L_fd(const Field& f);

enum class CutoffShape {
  Smoothstep,  ///< exp(-1/t) smoothstep between r = 1 and r = 2 (C-infinity)
  Bridge,      ///< exp(1 - 1/(1-(r-1)^2)) on (1,2); continuous but not flat at r = 1
};

/// chi_0(r): 1 on [0,1], 0 on [2, inf), monotone in between.
double cutoff_chi0(double r, CutoffShape shape = CutoffShape::Smoothstep);
/// chi(y,s) = chi_0(|y| / (K0 sqrt(s))).
double cutoff_chi(double y, double s, double K0, CutoffShape shape = CutoffShape::Smoothstep);

/// q = q0 h0 + q1 h1 + q2 h2 + q_minus + q_e at every node. q_minus + sum q_m h_m
/// equals q chi, which vanishes for |y| >= 2 K0 sqrt(s); q_e = q (1 - chi).
struct SpectralDecomp {
  double q0 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  Field q_minus;
  Field q_e;
  double K0 = 0.0;
  double s = 0.0;
};

/// Scalar summary of a decomposition; what trap-set checks consume.
struct ModeSummary {
  double s = 0.0;
  std::array<double, 3> modes{};  ///< q0, q1, q2
  double minus_seminorm = 0.0;    ///< sup_{|y| <= 2 K0 sqrt(s)} |q_minus| / (1 + |y|^3)
  double qe_sup = 0.0;
};

/// Precomputed quadrature weights and h_0..h_2 samples on one symmetric grid.
class SpectralProjector {
 public:
  explicit SpectralProjector(const Grid& grid, CutoffShape shape = CutoffShape::Smoothstep);

  const Grid& grid() const { return grid_; }
  CutoffShape shape() const { return shape_; }

  SpectralDecomp decompose(const Field& q, double s, double K0) const;
  ModeSummary summarize(std::span<const double> q, double s, double K0) const;
  /// <f, k_m> = <f, h_m> / (2^m m!).
  double project(std::span<const double> f, int m) const;

 private:
  void check_width(double s, double K0) const;

  Grid grid_;
  CutoffShape shape_;
  std::vector<double> weight_;  // trapezoid weight times rho
  std::array<std::vector<double>, 3> h_;
};

SpectralDecomp decompose(const Field& q, double s, double K0,
                         CutoffShape shape = CutoffShape::Smoothstep);

/// sup over |y| <= 2 K0 sqrt(s) of |q_minus(y)| / (1 + |y|^3).
double seminorm_minus(const SpectralDecomp& d);

/// Rebuilds q from its five components.
Field reconstruct(const SpectralDecomp& d);

}  // namespace blowup
