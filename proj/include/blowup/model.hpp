#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace blowup {

/// Reason a parameter set was rejected.
enum class ParameterErrorKind {
  InvalidExponent,        ///< p <= 1 or a non-finite value
  SupercriticalAlpha,     ///< alpha >= 2p/(p+1) or alpha < 0
  SupercriticalAlphaBar,  ///< alpha_bar >= p or alpha_bar < 0
};

class ParameterError : public std::invalid_argument {
 public:
  ParameterError(ParameterErrorKind kind, const std::string& what)
      : std::invalid_argument(what), kind_(kind) {}
  ParameterErrorKind kind() const noexcept { return kind_; }

 private:
  ParameterErrorKind kind_;
};

/// Model exponents and coefficients of
///   u_t = u_xx + |u|^{p-1} u + mu_bar |u|^alpha_bar + mu |u_x|^alpha + mu0
/// together with the constants derived from them. Only make_params builds a
/// valid instance; downstream code assumes subcriticality holds.
struct ModelParams {
  double p = 2.0;
  double alpha = 0.0;
  double alpha_bar = 0.0;
  double mu = 0.0;
  double mu_bar = 0.0;
  double mu0 = 0.0;

  double beta = 0.0;       ///< (2p - alpha(p+1)) / (2(p-1))
  double beta_bar = 0.0;   ///< (p - alpha_bar) / (p-1)
  double beta0 = 0.0;      ///< min(beta, beta_bar)
  double kappa = 0.0;      ///< (p-1)^{-1/(p-1)} = f(0)
  double p_bar = 0.0;      ///< min(p, 2)

  bool pure_semilinear() const { return mu == 0.0 && mu_bar == 0.0 && mu0 == 0.0; }
};

ModelParams make_params(double p, double alpha, double alpha_bar, double mu, double mu_bar,
                        double mu0);

/// Blow-up profile f(z) = (p-1 + (p-1)^2 z^2 / (4p))^{-1/(p-1)}.
double profile_f(const ModelParams& params, double z);
/// f'(z) = -((p-1)/(2p)) z f(z)^p.
double profile_fprime(const ModelParams& params, double z);
double profile_fsecond(const ModelParams& params, double z);

/// f and its first two derivatives from a single power evaluation, using
/// f^{p-1} = 1 / (p-1 + (p-1)^2 z^2 / (4p)).
struct ProfileValues {
  double f = 0.0;
  double f_pm1 = 0.0;  ///< f^{p-1}
  double f_p = 0.0;    ///< f^p
  double fprime = 0.0;
  double fsecond = 0.0;
};
inline ProfileValues profile_values(const ModelParams& params, double z);

/// R at one node given the profile values at z = y/sqrt(s).
inline double remainder_from(const ModelParams& params, const ProfileValues& pv, double z,
                             double s);

/// Residual of the profile ODE, -z f'(z)/2 - f/(p-1) + f^p, which vanishes
/// identically for the exact profile.
double profile_residual(const ModelParams& params, double z);

/// phi(y,s) = f(y/sqrt(s)) + kappa/(2ps), the approximate self-similar solution.
double phi(const ModelParams& params, double y, double s);
double phi_y(const ModelParams& params, double y, double s);
double phi_yy(const ModelParams& params, double y, double s);
double phi_s(const ModelParams& params, double y, double s);

/// V(y,s) = p phi^{p-1} - p/(p-1).
double potential_V(const ModelParams& params, double y, double s);

/// B(q) = |phi+q|^{p-1}(phi+q) - phi^p - p phi^{p-1} q.
double nonlinear_B(const ModelParams& params, double phi_val, double q_val);

/// R(y,s) = phi_yy - y phi_y / 2 - phi/(p-1) + phi^p - phi_s, evaluated from
/// closed forms with the profile identity removed analytically.
double remainder_R(const ModelParams& params, double y, double s);

/// N = mu |phi_y + q_y|^alpha e^{-beta s} + mu_bar |phi + q|^alpha_bar e^{-beta_bar s}
///     + mu0 e^{-p s/(p-1)}.
double perturbation_N(const ModelParams& params, double phi_val, double grad_phi_val,
                      double q_val, double grad_q_val, double s);

/// Same as perturbation_N with the three exponential weights precomputed.
struct ForcingWeights {
  double grad = 0.0;
  double value = 0.0;
  double constant = 0.0;
};
ForcingWeights forcing_weights(const ModelParams& params, double s);
inline double perturbation_N(const ModelParams& params, const ForcingWeights& w, double u,
                             double grad_u);

// ---------------------------------------------------------------------------

/// x^e with fast paths for the small integer exponents used in practice.
inline double rpow(double x, double e) {
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  if (e == 0.0) return 1.0;
  if (e == 3.0) return x * x * x;
  if (e == -1.0) return 1.0 / x;
  if (e == 4.0) {
    const double x2 = x * x;
    return x2 * x2;
  }
  return std::pow(x, e);
}

inline double perturbation_N(const ModelParams& params, const ForcingWeights& w, double u,
                             double grad_u) {
  double n = w.constant;
  if (w.grad != 0.0) n += w.grad * rpow(std::abs(grad_u), params.alpha);
  if (w.value != 0.0) n += w.value * rpow(std::abs(u), params.alpha_bar);
  return n;
}

inline ProfileValues profile_values(const ModelParams& params, double z) {
  const double p = params.p;
  const double d = p - 1.0 + (p - 1.0) * (p - 1.0) / (4.0 * p) * z * z;
  ProfileValues v;
  v.f_pm1 = 1.0 / d;
  v.f = p == 2.0 ? v.f_pm1 : std::pow(d, -1.0 / (p - 1.0));
  v.f_p = v.f * v.f_pm1;
  const double g = (p - 1.0) / (2.0 * p);
  v.fprime = -g * z * v.f_p;
  v.fsecond = -g * v.f_p * (1.0 - 0.5 * (p - 1.0) * z * z * v.f_pm1);
  return v;
}

inline double remainder_from(const ModelParams& params, const ProfileValues& pv, double z, double s) {
  // With phi = f + c and -z f'/2 - f/(p-1) + f^p = 0, the O(1) part of R
  // cancels exactly, leaving only terms of size 1/s.
  const double p = params.p;
  const double c = params.kappa / (2.0 * p * s);
  return pv.fsecond / s + z * pv.fprime / (2.0 * s) + c / s - c / (p - 1.0) +
         (rpow(pv.f + c, p) - pv.f_p);
}

}  // namespace blowup
