#ifndef PVAC_COORDS_HPP
#define PVAC_COORDS_HPP

#include "pvac/state.hpp"

#include <functional>

namespace pvac {

/// Tabulated Eulerian data on [a, b] with the vacuum at the left endpoint.
struct EulerianProfile {
  VectorR x;    // monotone positions, x[0] = a (vacuum point)
  VectorR rho;  // density, rho[0] = 0
  VectorR u;    // velocity, u[last] = 0
  Real vacuum_point = 0.0;
};

inline EulerianProfile sample_eulerian(const std::function<Real(Real)>& rho,
                                       const std::function<Real(Real)>& u, Real a,
                                       Real b, Index nsamples) {
  if (nsamples < 9) throw ConfigError("sample_eulerian: need at least 9 samples");
  EulerianProfile prof;
  prof.vacuum_point = a;
  prof.x.resize(nsamples);
  prof.rho.resize(nsamples);
  prof.u.resize(nsamples);
  for (Index i = 0; i < nsamples; ++i) {
    const Real xi = a + (b - a) * Real(i) / Real(nsamples - 1);
    prof.x[i] = xi;
    prof.rho[i] = rho(xi);
    prof.u[i] = u(xi);
  }
  return prof;
}

namespace detail {

/// Integral over [lo, hi] of the quadratic through (x0,f0), (x1,f1), (x2,f2).
inline Real quadratic_panel(Real x0, Real x1, Real x2, Real f0, Real f1, Real f2,
                            Real lo, Real hi) {
  auto basis = [&](Real xa, Real xb, Real xc) {
    // integral of (x-xb)(x-xc) / ((xa-xb)(xa-xc)) over [lo, hi]
    const Real den = (xa - xb) * (xa - xc);
    auto prim = [&](Real t) {
      return t * t * t / 3.0 - (xb + xc) * t * t / 2.0 + xb * xc * t;
    };
    return (prim(hi) - prim(lo)) / den;
  };
  return f0 * basis(x0, x1, x2) + f1 * basis(x1, x0, x2) + f2 * basis(x2, x0, x1);
}

/// Cumulative integral on a monotone table by piecewise quadratics
/// (nonuniform composite Simpson).
inline VectorR cumulative_quadratic(const VectorR& x, const VectorR& f) {
  const Index n = x.size();
  VectorR out(n);
  out[0] = 0.0;
  for (Index i = 0; i + 1 < n; ++i) {
    const Index j0 = (i + 2 < n) ? i : n - 3;  // panel anchor
    out[i + 1] = out[i] + quadratic_panel(x[j0], x[j0 + 1], x[j0 + 2], f[j0],
                                          f[j0 + 1], f[j0 + 2], x[i], x[i + 1]);
  }
  return out;
}

}  // namespace detail

struct LagrangianData {
  State state;
  Params params;  // with the measured total mass
};

/// Transform admissible Eulerian data to the normalized singular coordinate.
/// Checks the physical-vacuum conditions: rho(a) = 0, rho > 0 inside,
/// 0 < d(rho^{gamma-1})/dx|_a < infinity (slope in [1e-6, 1e6] in normalized
/// units), finite mass, u(b) = 0.
inline LagrangianData lagrangian_of_eulerian(const EulerianProfile& prof, Real gamma,
                                             Real A, const Grid& g) {
  const Index ns = prof.x.size();
  if (ns < 9 || prof.rho.size() != ns || prof.u.size() != ns)
    throw ShapeError("lagrangian_of_eulerian: inconsistent profile table");
  for (Index i = 1; i < ns; ++i)
    if (!(prof.x[i] > prof.x[i - 1]))
      throw ShapeError("lagrangian_of_eulerian: x not strictly increasing");

  const Real rho_scale = prof.rho.maxCoeff();
  if (!(rho_scale > 0.0)) throw AdmissibilityError("profile has no gas");
  if (std::abs(prof.rho[0]) > 1e-10 * rho_scale)
    throw AdmissibilityError("physical vacuum requires rho(a) = 0");
  for (Index i = 1; i < ns; ++i)
    if (!(prof.rho[i] > 0.0))
      throw AdmissibilityError("rho must be positive away from the vacuum point");
  if (std::abs(prof.u[ns - 1]) > 1e-8 * (1.0 + prof.u.cwiseAbs().maxCoeff()))
    throw AdmissibilityError("compatibility requires u(b) = 0");

  // physical vacuum slope: one-sided estimate of d(rho^{gamma-1})/dx at a
  const Real p1 = std::pow(prof.rho[1], gamma - 1.0);
  const Real p2 = std::pow(prof.rho[2], gamma - 1.0);
  const Real h1 = prof.x[1] - prof.x[0], h2 = prof.x[2] - prof.x[1];
  const Real slope = (p1 * (h1 + h2) * (h1 + h2) - p2 * h1 * h1) /
                     (h1 * (h1 + h2) * h2 + h1 * h1 * h2);
  if (!(slope > 1e-6) || !(slope < 1e6))
    throw AdmissibilityError("vacuum is not physical: d(rho^{gamma-1})/dx at a is " +
                             std::to_string(slope));

  VectorR Y = detail::cumulative_quadratic(prof.x, prof.rho);
  {
    const Real e = 1.0 / (gamma - 1.0);
    const Real Cv0 = prof.rho[1] / std::pow(prof.x[1] - prof.x[0], e);
    const Real y1m = Cv0 * (gamma - 1.0) / gamma *
                     std::pow(prof.x[1] - prof.x[0], gamma / (gamma - 1.0));
    Y.array() += y1m - Y[1];
    Y[0] = 0.0;
  }
  const Real M = Y[ns - 1];
  if (!(M > 0.0) || !std::isfinite(M))
    throw AdmissibilityError("total mass must be finite and positive");
  auto params = Params::make(gamma, A, M);

  // invert y(x) per grid node and sample the normalized profiles
  State st;
  st.phi_over_xi = Field(g, 0.0);
  st.u = Field(g, 1.0);
  st.dphi_dt = Field(g, 1.0);
  // Physical-vacuum model rho = C (x-a)^{1/(gamma-1)} inside the first panel
  // (rho^{gamma-1} has a finite slope there by admissibility); the tabulated
  // quadratic machinery takes over beyond x[1].
  const Real a = prof.x[0];
  const Real expo = 1.0 / (gamma - 1.0);
  const Real Cv = prof.rho[1] / std::pow(prof.x[1] - a, expo);
  // interpolate density through rho^{gamma-1}, the variable with a finite
  // slope across the vacuum point
  VectorR vtab(ns);
  for (Index i = 0; i < ns; ++i) vtab[i] = std::pow(prof.rho[i], gamma - 1.0);

  Index panel = 0;
  for (Index j = 0; j < g.n; ++j) {
    const Real y = y_of_xi(g.nodes[j], params);
    Real xj, rhoj, uj;
    if (y <= Y[1]) {
      xj = a + std::pow(y * gamma / (Cv * (gamma - 1.0)), (gamma - 1.0) / gamma);
      rhoj = Cv * std::pow(xj - a, expo);
      auto c = lagrange3(prof.x[0], prof.x[1], prof.x[2], xj);
      uj = c[0] * prof.u[0] + c[1] * prof.u[1] + c[2] * prof.u[2];
    } else {
      while (panel + 2 < ns && Y[panel + 1] < y) ++panel;
      // solve for x in the current panel by bisection on the quadratic integral
      const Index j0 = (panel + 2 < ns) ? panel : ns - 3;
      Real lo = prof.x[panel], hi = prof.x[panel + 1];
      for (int it = 0; it < 80; ++it) {
        const Real mid = 0.5 * (lo + hi);
        const Real ym = Y[panel] + detail::quadratic_panel(
                                       prof.x[j0], prof.x[j0 + 1], prof.x[j0 + 2],
                                       prof.rho[j0], prof.rho[j0 + 1], prof.rho[j0 + 2],
                                       prof.x[panel], mid);
        (ym < y ? lo : hi) = mid;
      }
      xj = 0.5 * (lo + hi);
      auto interp = [&](const VectorR& f) {
        auto c = lagrange3(prof.x[j0], prof.x[j0 + 1], prof.x[j0 + 2], xj);
        return c[0] * f[j0] + c[1] * f[j0 + 1] + c[2] * f[j0 + 2];
      };
      rhoj = std::pow(std::max(interp(vtab), 0.0), expo);
      uj = interp(prof.u);
    }
    st.phi_over_xi.values[j] = normalized_phi_of_rho(rhoj, params) / g.nodes[j];
    st.u.values[j] = params.lambda * uj;
  }
  for (Index j = 0; j < g.n; ++j)
    if (!(st.phi_over_xi.values[j] > 0.0) || !std::isfinite(st.phi_over_xi.values[j]))
      throw AdmissibilityError("transformed profile not bounded: phi/xi <= 0");
  return {std::move(st), params};
}

/// Inverse transform: x(y) = a0 + integral of dy'/rho with dy = y'(xi) d xi.
/// Round-trips with lagrangian_of_eulerian to discretization order; total
/// mass equals M by the coordinate identity.
inline EulerianProfile eulerian_reconstruct(const State& st, Real a0,
                                            const Params& p) {
  const Grid& g = st.grid();
  for (Index j = 0; j < g.n; ++j)
    if (!(st.phi_over_xi.values[j] > 0.0))
      throw DegeneracyError("eulerian_reconstruct: phi/xi <= 0 at node", j);

  EulerianProfile out;
  out.vacuum_point = a0;
  out.x.resize(g.n + 1);
  out.rho.resize(g.n + 1);
  out.u.resize(g.n + 1);
  const Real expo = 2.0 * p.gamma / (p.gamma - 1.0);
  VectorR integrand(g.n);  // y'(xi)/rho(xi), vanishes at the vacuum point
  VectorR rho(g.n);
  for (Index j = 0; j < g.n; ++j) {
    const Real phi = st.phi_over_xi.values[j] * g.nodes[j];
    rho[j] = rho_of_normalized_phi(phi, p);
    integrand[j] = p.total_mass * expo * std::pow(g.nodes[j], expo - 1.0) / rho[j];
  }
  out.x.resize(g.n + 2);
  out.rho.resize(g.n + 2);
  out.u.resize(g.n + 2);
  out.x[0] = a0;
  out.rho[0] = 0.0;
  out.u[0] = st.u.values[0] / p.lambda;  // limit value at the interface
  Real acc = 0.0;
  for (Index j = 0; j < g.n; ++j) {
    const Real left = (j == 0) ? 0.0 : g.nodes[j - 1];
    const Real fl = (j == 0) ? 0.0 : integrand[j - 1];
    acc += 0.5 * (fl + integrand[j]) * (g.nodes[j] - left);
    out.x[j + 1] = a0 + acc;
    out.rho[j + 1] = rho[j];
    out.u[j + 1] = st.u.values[j] / p.lambda;
  }
  // wall endpoint xi = 1 by one-sided extrapolation
  const Real integrand_b = extrapolate_right(g, integrand);
  out.x[g.n + 1] = out.x[g.n] +
                   0.5 * (integrand[g.n - 1] + integrand_b) * (1.0 - g.nodes[g.n - 1]);
  out.rho[g.n + 1] = std::max(extrapolate_right(g, rho), 0.0);
  out.u[g.n + 1] = extrapolate_right(g, st.u.values) / p.lambda;
  return out;
}

/// Total mass of a reconstructed profile through the mass coordinate.
inline Real total_mass(const EulerianProfile& prof) {
  VectorR Y = detail::cumulative_quadratic(prof.x, prof.rho);
  return Y[Y.size() - 1];
}

}  // namespace pvac

#endif  // PVAC_COORDS_HPP
