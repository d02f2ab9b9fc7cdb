#ifndef PVAC_NORMS_HPP
#define PVAC_NORMS_HPP

#include "pvac/operators.hpp"
#include "pvac/state.hpp"

#include <vector>

namespace pvac {

/// || f ||_{X^{k,s}} or || g ||_{Y^{k,s}}: sqrt of the sum of squared L2
/// norms of the alternating powers up to order s.
template <class Scalar>
Scalar space_norm(const BasicOperatorStack<Scalar>& st, Chain which, int s,
                  const BasicField<Scalar>& f) {
  if (s < 0 || s > st.max_power) throw OrderError("space_norm: order out of range");
  Scalar total = 0;
  BasicField<Scalar> cur = f;
  for (int i = 0; i <= s; ++i) {
    const Scalar nrm = norm_l2(cur);
    if (!std::isfinite(nrm)) throw OverflowError("space_norm: non-finite level", i);
    total += nrm * nrm;
    if (i < s) {
      const bool use_V = (which == Chain::X) ? (i % 2 == 0) : (i % 2 == 1);
      cur = use_V ? apply_V(st, cur) : apply_Vstar(st, cur);
    }
  }
  return std::sqrt(total);
}

/// Per-time record of the full norm hierarchy.
struct EnergyReport {
  Real time = 0.0;
  Real zeroth = 0.0;                // (1/(2k+1))||xi^k phi||^2 + ||xi^k u||^2
  Real full = 0.0;                  // the weighted energy functional
  Real equivalent = 0.0;            // unweighted X/Y form (cross-validation)
  std::vector<Real> phi_levels;     // ||(V)^i(xi^k phi)||^2, i = 0..s
  std::vector<Real> u_levels;       // ||(V*)^i(xi^k u)||^2, i = 0..s
  Real phi_over_xi_min = 0.0;
  Real phi_over_xi_max = 0.0;
};

/// Zeroth energy, the conserved quadratic form.
inline Real zeroth_energy(const OperatorStack& ops, const State& st) {
  Field p = xi_k_phi(st, ops.k);
  Field u = xi_k_u(st, ops.k);
  return inner(p, p) / (2.0 * ops.k + 1.0) + inner(u, u);
}

/// Full energy functional at order s, with the exact constant weighting:
/// zeroth part + (1/(2k+1)^2) sum_i ||(V)^i(xi^k phi)||^2 + sum_i ||(V*)^i(xi^k u)||^2.
/// Also evaluates the equivalent unweighted form alongside.
inline EnergyReport energy(const OperatorStack& ops, const State& st, int s) {
  if (s < 0 || s > ops.max_power) throw OrderError("energy: order out of range");
  EnergyReport rep;
  rep.time = st.time;
  rep.phi_levels.resize(s + 1);
  rep.u_levels.resize(s + 1);

  Field fp = xi_k_phi(st, ops.k);
  Field fu = xi_k_u(st, ops.k);
  for (int i = 0; i <= s; ++i) {
    const Real np = norm_l2(fp), nu = norm_l2(fu);
    if (!std::isfinite(np) || !std::isfinite(nu))
      throw OverflowError("energy: non-finite value in hierarchy at level", i);
    rep.phi_levels[i] = np * np;
    rep.u_levels[i] = nu * nu;
    if (i < s) {
      // X-chain on xi^k phi, Y-chain on xi^k u
      fp = (i % 2 == 0) ? apply_V(ops, fp) : apply_Vstar(ops, fp);
      fu = (i % 2 == 0) ? apply_Vstar(ops, fu) : apply_V(ops, fu);
    }
  }
  const Real c1 = 1.0 / (2.0 * ops.k + 1.0);
  rep.zeroth = c1 * rep.phi_levels[0] + rep.u_levels[0];
  rep.full = rep.zeroth;
  rep.equivalent = rep.phi_levels[0] + rep.u_levels[0];
  for (int i = 1; i <= s; ++i) {
    rep.full += c1 * c1 * rep.phi_levels[i] + rep.u_levels[i];
    rep.equivalent += rep.phi_levels[i] + rep.u_levels[i];
  }
  rep.phi_over_xi_min = st.phi_over_xi.values.minCoeff();
  rep.phi_over_xi_max = st.phi_over_xi.values.maxCoeff();
  return rep;
}

/// Approximate-scheme energy at iteration level n:
/// sum_{i<=ceil(k)} (1/(2k+1)^2)||(V_n*)^i G||^2 + ||(V_n)^i F||^2.
inline Real approx_energy(const OperatorStack& ops_n, const Field& G, const Field& F) {
  const int imax = ceil_int(ops_n.k);
  const Real c = 1.0 / ((2.0 * ops_n.k + 1.0) * (2.0 * ops_n.k + 1.0));
  Real total = 0.0;
  Field g = G, f = F;
  for (int i = 0; i <= imax; ++i) {
    const Real ng = norm_l2(g), nf = norm_l2(f);
    if (!std::isfinite(ng) || !std::isfinite(nf))
      throw OverflowError("approx_energy: non-finite value at level", i);
    total += c * ng * ng + nf * nf;
    if (i < imax) {
      g = (i % 2 == 0) ? apply_Vstar(ops_n, g) : apply_V(ops_n, g);  // Y-chain
      f = (i % 2 == 0) ? apply_V(ops_n, f) : apply_Vstar(ops_n, f);  // X-chain
    }
  }
  return total;
}

/// Ratio of the inhomogeneous to the homogeneous space norm at the given order.
inline Real norm_equivalence_ratio(const OperatorStack& ops, Chain which, int order,
                                   const Field& f) {
  auto bar = homogeneous_stack(*ops.grid, ops.k, ops.max_power);
  const Real num = space_norm(ops, which, order, f);
  const Real den = space_norm(bar, which, order, f);
  if (!(den > 0.0)) throw Error("norm_equivalence_ratio: zero homogeneous norm");
  return num / den;
}

/// Difference functional between two states, each differentiated by its own
/// operator stack (levels i = 0, 1, 2).
struct DiffReport {
  Real d_value = 0.0;
  std::array<Real, 3> per_level{};
};

inline DiffReport diff_functional(const OperatorStack& ops1, const OperatorStack& ops2,
                                  const State& st1, const State& st2) {
  if (st1.phi_over_xi.grid != st2.phi_over_xi.grid)
    throw ShapeError("diff_functional: states on different grids");
  const Real k = ops1.k;
  const Real c1 = 1.0 / (2.0 * k + 1.0);
  DiffReport rep;

  Field p1 = xi_k_phi(st1, k), p2 = xi_k_phi(st2, k);
  Field u1 = xi_k_u(st1, k), u2 = xi_k_u(st2, k);
  for (int i = 0; i <= 2; ++i) {
    Field dp = p1, du = u1;
    dp.values -= p2.values;
    du.values -= u2.values;
    const Real np = norm_l2(dp), nu = norm_l2(du);
    const Real wphi = (i == 0) ? c1 : c1 * c1;
    rep.per_level[i] = wphi * np * np + nu * nu;
    rep.d_value += rep.per_level[i];
    if (i < 2) {
      p1 = (i % 2 == 0) ? apply_V(ops1, p1) : apply_Vstar(ops1, p1);
      p2 = (i % 2 == 0) ? apply_V(ops2, p2) : apply_Vstar(ops2, p2);
      u1 = (i % 2 == 0) ? apply_Vstar(ops1, u1) : apply_V(ops1, u1);
      u2 = (i % 2 == 0) ? apply_Vstar(ops2, u2) : apply_V(ops2, u2);
    }
  }
  return rep;
}

}  // namespace pvac

#endif  // PVAC_NORMS_HPP
