#include "blowup/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace blowup {

ModelParams make_params(double p, double alpha, double alpha_bar, double mu, double mu_bar,
                        double mu0) {
  if (!std::isfinite(p) || !(p > 1.0)) {
    throw ParameterError(ParameterErrorKind::InvalidExponent,
                         fmt::format("invalid exponent: p must exceed 1 (got {})", p));
  }
  if (!std::isfinite(mu) || !std::isfinite(mu_bar) || !std::isfinite(mu0)) {
    throw ParameterError(ParameterErrorKind::InvalidExponent, "non-finite coefficient");
  }
  const double alpha_crit = 2.0 * p / (p + 1.0);
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha >= alpha_crit) {
    throw ParameterError(
        ParameterErrorKind::SupercriticalAlpha,
        fmt::format("supercritical alpha: need 0 <= alpha < 2p/(p+1) = {} (got {})", alpha_crit,
                    alpha));
  }
  if (!std::isfinite(alpha_bar) || alpha_bar < 0.0 || alpha_bar >= p) {
    throw ParameterError(
        ParameterErrorKind::SupercriticalAlphaBar,
        fmt::format("supercritical alpha_bar: need 0 <= alpha_bar < p = {} (got {})", p,
                    alpha_bar));
  }

  ModelParams m;
  m.p = p;
  m.alpha = alpha;
  m.alpha_bar = alpha_bar;
  m.mu = mu;
  m.mu_bar = mu_bar;
  m.mu0 = mu0;
  m.beta = (2.0 * p - alpha * (p + 1.0)) / (2.0 * (p - 1.0));
  m.beta_bar = (p - alpha_bar) / (p - 1.0);
  m.beta0 = std::min(m.beta, m.beta_bar);
  m.kappa = std::pow(p - 1.0, -1.0 / (p - 1.0));
  m.p_bar = std::min(p, 2.0);
  return m;
}

double profile_f(const ModelParams& params, double z) { return profile_values(params, z).f; }

double profile_fprime(const ModelParams& params, double z) {
  return profile_values(params, z).fprime;
}

double profile_fsecond(const ModelParams& params, double z) {
  return profile_values(params, z).fsecond;
}

double profile_residual(const ModelParams& params, double z) {
  const ProfileValues v = profile_values(params, z);
  return -0.5 * z * v.fprime - v.f / (params.p - 1.0) + v.f_p;
}

double phi(const ModelParams& params, double y, double s) {
  return profile_f(params, y / std::sqrt(s)) + params.kappa / (2.0 * params.p * s);
}

double phi_y(const ModelParams& params, double y, double s) {
  const double rs = std::sqrt(s);
  return profile_fprime(params, y / rs) / rs;
}

double phi_yy(const ModelParams& params, double y, double s) {
  return profile_fsecond(params, y / std::sqrt(s)) / s;
}

double phi_s(const ModelParams& params, double y, double s) {
  const double z = y / std::sqrt(s);
  return -z * profile_fprime(params, z) / (2.0 * s) - params.kappa / (2.0 * params.p * s * s);
}

double potential_V(const ModelParams& params, double y, double s) {
  const double p = params.p;
  return p * rpow(phi(params, y, s), p - 1.0) - p / (p - 1.0);
}

double nonlinear_B(const ModelParams& params, double phi_val, double q_val) {
  const double p = params.p;
  const double w = phi_val + q_val;
  const double phi_pm1 = rpow(phi_val, p - 1.0);
  return rpow(std::abs(w), p - 1.0) * w - phi_pm1 * phi_val - p * phi_pm1 * q_val;
}

double remainder_R(const ModelParams& params, double y, double s) {
  const double z = y / std::sqrt(s);
  return remainder_from(params, profile_values(params, z), z, s);
}

ForcingWeights forcing_weights(const ModelParams& params, double s) {
  ForcingWeights w;
  w.grad = params.mu == 0.0 ? 0.0 : params.mu * std::exp(-params.beta * s);
  w.value = params.mu_bar == 0.0 ? 0.0 : params.mu_bar * std::exp(-params.beta_bar * s);
  w.constant = params.mu0 == 0.0 ? 0.0 : params.mu0 * std::exp(-params.p / (params.p - 1.0) * s);
  return w;
}

double perturbation_N(const ModelParams& params, double phi_val, double grad_phi_val,
                      double q_val, double grad_q_val, double s) {
  return perturbation_N(params, forcing_weights(params, s), phi_val + q_val,
                        grad_phi_val + grad_q_val);
}

}  // namespace blowup
