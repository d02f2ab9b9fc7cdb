#ifndef PVAC_PARAMS_HPP
#define PVAC_PARAMS_HPP

#include "pvac/common.hpp"

namespace pvac {

/// k = (gamma+1) / (2(gamma-1)); strictly decreasing on (1,inf), k(3) = 1.
inline Real k_of_gamma(Real gamma) {
  if (!(gamma > 1.0))
    throw ConfigError("k_of_gamma: gamma must exceed 1, got " + std::to_string(gamma));
  return 0.5 * (gamma + 1.0) / (gamma - 1.0);
}

/// Gas parameters plus the derived weight exponent k, the energy closure
/// order s = ceil(k)+3, and the normalization constants that bring the
/// system to the unit interval in the singular coordinate.
///
/// Normalization convention: with xi = (y/M)^((gamma-1)/2gamma), the profile
/// phi_hat = kappa * rho^((gamma-1)/2) and velocity u_hat = lambda * u solve
/// the normalized first-order system on 0 <= xi <= 1 provided
///   kappa^(2k) = sqrt(A gamma) (gamma-1) / (2 gamma M),
///   lambda     = kappa (gamma-1) / (2 sqrt(A gamma)).
/// The default A = M = (gamma-1)^2/(4 gamma) gives kappa = lambda = 1.
struct Params {
  Real gamma = 3.0;
  Real entropy_const = 1.0 / 3.0;  // A
  Real total_mass = 1.0 / 3.0;     // M
  Real k = 1.0;
  int s = 4;
  Real kappa = 1.0;   // phi scale
  Real lambda = 1.0;  // velocity scale

  static Real default_entropy_const(Real gamma) {
    return (gamma - 1.0) * (gamma - 1.0) / (4.0 * gamma);
  }

  static Params make(Real gamma) {
    return make(gamma, default_entropy_const(gamma), default_entropy_const(gamma));
  }

  static Params make(Real gamma, Real A, Real M) {
    if (!(gamma > 1.0)) throw ConfigError("Params: gamma must exceed 1");
    if (!(A > 0.0) || !(M > 0.0)) throw ConfigError("Params: A and M must be positive");
    Params p;
    p.gamma = gamma;
    p.entropy_const = A;
    p.total_mass = M;
    p.k = k_of_gamma(gamma);
    p.s = ceil_int(p.k) + 3;
    const Real sag = std::sqrt(A * gamma);
    p.kappa = std::pow(sag * (gamma - 1.0) / (2.0 * gamma * M), 1.0 / (2.0 * p.k));
    p.lambda = p.kappa * (gamma - 1.0) / (2.0 * sag);
    return p;
  }

  int ceil_k() const { return ceil_int(k); }
};

/// phi = (2 sqrt(A gamma) / (gamma-1)) rho^((gamma-1)/2)  (pre-normalization map).
inline Real phi_of_rho(Real rho, const Params& p) {
  if (rho < 0.0) throw AdmissibilityError("phi_of_rho: negative density");
  const Real c = 2.0 * std::sqrt(p.entropy_const * p.gamma) / (p.gamma - 1.0);
  return c * std::pow(rho, 0.5 * (p.gamma - 1.0));
}

inline Real rho_of_phi(Real phi, const Params& p) {
  if (phi < 0.0) throw AdmissibilityError("rho_of_phi: negative phi");
  const Real c = 2.0 * std::sqrt(p.entropy_const * p.gamma) / (p.gamma - 1.0);
  return std::pow(phi / c, 2.0 / (p.gamma - 1.0));
}

/// Normalized singular coordinate xi(y) = (y/M)^((gamma-1)/2gamma); xi(0)=0, xi(M)=1.
inline Real xi_of_y(Real y, const Params& p) {
  if (y < -1e-14 * p.total_mass || y > p.total_mass * (1.0 + 1e-14))
    throw AdmissibilityError("xi_of_y: mass coordinate outside [0, M]");
  const Real t = std::clamp(y / p.total_mass, 0.0, 1.0);
  return std::pow(t, 0.5 * (p.gamma - 1.0) / p.gamma);
}

inline Real y_of_xi(Real xi, const Params& p) {
  if (xi < 0.0 || xi > 1.0 + 1e-14)
    throw AdmissibilityError("y_of_xi: xi outside [0, 1]");
  return p.total_mass * std::pow(std::min(xi, 1.0), 2.0 * p.gamma / (p.gamma - 1.0));
}

/// Normalized profile value phi_hat(rho) = kappa rho^((gamma-1)/2).
inline Real normalized_phi_of_rho(Real rho, const Params& p) {
  if (rho < 0.0) throw AdmissibilityError("normalized_phi_of_rho: negative density");
  return p.kappa * std::pow(rho, 0.5 * (p.gamma - 1.0));
}

inline Real rho_of_normalized_phi(Real phi, const Params& p) {
  if (phi < 0.0) throw AdmissibilityError("rho_of_normalized_phi: negative phi");
  return std::pow(phi / p.kappa, 2.0 / (p.gamma - 1.0));
}

}  // namespace pvac

#endif  // PVAC_PARAMS_HPP
