#ifndef PVAC_STATE_HPP
#define PVAC_STATE_HPP

#include "pvac/grid.hpp"
#include "pvac/operators.hpp"
#include "pvac/params.hpp"

namespace pvac {

/// Evolving pair stored as normalized profiles: phi/xi (bounded away from 0)
/// and u, plus the cached time derivative of phi recomputed from the equation
/// (never finite-differenced in time).
struct State {
  Field phi_over_xi;
  Field u;
  Field dphi_dt;
  Real time = 0.0;

  const Grid& grid() const { return *phi_over_xi.grid; }
};

inline Field xi_k_phi(const State& st, Real k) {
  const Grid& g = st.grid();
  Field out(g, k + 1.0);
  out.values = discrete_xi_pow_k(g, k).array() * g.nodes.array() *
               st.phi_over_xi.values.array();
  return out;
}

inline Field xi_k_u(const State& st, Real k) {
  const Grid& g = st.grid();
  Field out(g, k + st.u.vanish_order);
  out.values = discrete_xi_pow_k(g, k).array() * st.u.values.array();
  return out;
}

/// Operator stack frozen at this state's profile (with the dphi/dt cache).
inline OperatorStack stack_of(const State& st, const Params& p,
                              Real tracked_bound = 0.0) {
  return make_stack(st.grid(), p.k, st.phi_over_xi.values,
                    std::optional<VectorR>(st.dphi_dt.values), tracked_bound, p.s);
}

/// Refresh the dphi/dt cache from the first equation:
/// dphi/dt = V*(xi^k u) / xi^k.
inline void refresh_dphi_dt(State& st, const OperatorStack& ops) {
  const Grid& g = st.grid();
  Field h = apply_Vstar(ops, xi_k_u(st, ops.k));
  st.dphi_dt = Field(g, 1.0);
  st.dphi_dt.values = h.values.array() / ops.flux.mu.array();
}

}  // namespace pvac

#endif  // PVAC_STATE_HPP
