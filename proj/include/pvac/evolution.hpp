#ifndef PVAC_EVOLUTION_HPP
#define PVAC_EVOLUTION_HPP

#include "pvac/linear.hpp"
#include "pvac/norms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pvac {

enum class Scheme { Midpoint, RK4 };

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "midpoint") return Scheme::Midpoint;
  if (s == "rk4") return Scheme::RK4;
  throw ConfigError("unknown time scheme: " + s);
}

struct RunConfig {
  Params params;
  Real dt = 1e-3;
  Real T = 0.1;
  Scheme scheme = Scheme::Midpoint;
  Real C0 = 0.0;          // initial envelope bound; 0 -> measured from data
  bool adapt = true;      // truncate the run when the certified bounds break
  Index record_every = 1; // record cadence in steps
  Real cfl_limit = 0.5;   // advisory for midpoint, enforced for rk4

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("RunConfig: dt must be positive");
    if (!(T > 0.0)) throw ConfigError("RunConfig: T must be positive");
    if (record_every < 1) throw ConfigError("RunConfig: record_every must be >= 1");
  }
};

/// CFL estimate dt <= cfl * h_min / max (phi/xi)^{2k}.
inline Real cfl_number(const RunConfig& cfg, const State& st) {
  const Real speed = std::pow(st.phi_over_xi.values.maxCoeff(), 2.0 * cfg.params.k);
  return cfg.dt * speed / st.grid().min_spacing();
}

/// Time derivative of (xi^k phi, xi^k u):
///   d/dt (xi^k phi) = V*(xi^k u),  d/dt (xi^k u) = -(1/(2k+1)) V(xi^k phi).
/// Also refreshes the dphi/dt cache of the state through the first equation.
inline std::pair<Field, Field> rhs(const OperatorStack& ops, State& st) {
  Field dP = apply_Vstar(ops, xi_k_u(st, ops.k));
  Field dU = apply_V(ops, xi_k_phi(st, ops.k));
  dU.values *= -1.0 / (2.0 * ops.k + 1.0);
  st.dphi_dt = Field(st.grid(), 1.0);
  st.dphi_dt.values = dP.values.array() / ops.flux.mu.array();
  return {std::move(dP), std::move(dU)};
}

namespace detail {

struct PackedState {
  VectorR P;  // xi^k phi
  VectorR U;  // xi^k u
};

inline PackedState pack(const State& st, Real k) {
  return {xi_k_phi(st, k).values, xi_k_u(st, k).values};
}

inline State unpack(const Grid& g, const PackedState& y, Real k, Real t) {
  VectorR mu = discrete_xi_pow_k(g, k);
  State st;
  st.phi_over_xi = Field(g, 0.0);
  st.phi_over_xi.values = y.P.array() / (mu.array() * g.nodes.array());
  st.u = Field(g, 1.0);
  st.u.values = y.U.array() / mu.array();
  st.dphi_dt = Field(g, 1.0);
  st.time = t;
  return st;
}

inline VectorR profile_of(const Grid& g, const VectorR& P, Real k) {
  VectorR mu = discrete_xi_pow_k(g, k);
  return P.array() / (mu.array() * g.nodes.array());
}

/// S(z) applied to (P,U) for the profile frozen at z.
inline void apply_system(const OperatorStack& ops, const VectorR& P, const VectorR& U,
                         VectorR& dP, VectorR& dU) {
  const Grid& g = *ops.grid;
  Field Pf(g, P), Uf(g, U);
  dP = apply_Vstar(ops, Uf).values;
  dU = (-1.0 / (2.0 * ops.k + 1.0)) * apply_V(ops, Pf).values;
}

}  // namespace detail

/// One implicit-midpoint step. The scheme equation is solved with the
/// operator frozen at the iterated midpoint state; because the pair (V, V*)
/// is skew for every frozen profile, the zeroth energy is conserved exactly
/// regardless of how tightly the coefficient iteration converged.
inline State step_midpoint(const RunConfig& cfg, const State& state, Real dt) {
  const Grid& g = state.grid();
  const Real k = cfg.params.k;
  const Index n = g.n;
  auto y0 = detail::pack(state, k);
  VectorR zP = y0.P, zU = y0.U;  // midpoint iterate
  VectorR yP = y0.P, yU = y0.U;

  Eigen::SparseLU<SparseR> lu;
  const Real tol = 1e-13 * (y0.P.lpNorm<Eigen::Infinity>() +
                            y0.U.lpNorm<Eigen::Infinity>() + 1.0);
  // The frozen-coefficient iteration contracts to solver precision and then
  // amplifies roundoff through a localized vacuum-node mode, so stop at the
  // first non-decreasing residual and keep the best iterate. Conservation is
  // exact for any frozen profile; only the coefficient lag is at stake.
  VectorR bestP = y0.P, bestU = y0.U;
  Real prev_delta = std::numeric_limits<Real>::infinity();
  for (int it = 0; it < 30; ++it) {
    VectorR prof = detail::profile_of(g, zP, k);
    for (Index j = 0; j < n; ++j)
      if (!(prof[j] > 0.0))
        throw DegeneracyError("step_midpoint: phi/xi lost positivity at node", j);
    OperatorStack ops = make_stack(g, k, prof);

    std::vector<TripletR> trips;
    trips.reserve(10 * n);
    for (Index i = 0; i < 2 * n; ++i) trips.emplace_back(i, i, 1.0);
    append_triplets_Vstar(ops, -0.5 * dt, 0, n, trips);
    append_triplets_V(ops, 0.5 * dt / (2.0 * k + 1.0), n, 0, trips);
    SparseR M(2 * n, 2 * n);
    M.setFromTriplets(trips.begin(), trips.end());
    lu.compute(M);
    if (lu.info() != Eigen::Success)
      throw Error("step_midpoint: sparse factorization failed");

    VectorR sP, sU;
    detail::apply_system(ops, y0.P, y0.U, sP, sU);
    VectorR rhsv(2 * n);
    rhsv.head(n) = y0.P + 0.5 * dt * sP;
    rhsv.tail(n) = y0.U + 0.5 * dt * sU;
    VectorR y = lu.solve(rhsv);
    if (!y.allFinite())
      throw DegeneracyError("step_midpoint: non-finite update", -1);
    yP = y.head(n);
    yU = y.tail(n);
    VectorR zPn = 0.5 * (y0.P + yP), zUn = 0.5 * (y0.U + yU);
    const Real delta = (zPn - zP).lpNorm<Eigen::Infinity>() +
                       (zUn - zU).lpNorm<Eigen::Infinity>();
    if (delta >= prev_delta && it > 0) break;  // keep previous (best) iterate
    bestP = yP;
    bestU = yU;
    prev_delta = delta;
    zP = zPn;
    zU = zUn;
    if (delta <= tol) break;
  }
  State out = detail::unpack(g, {bestP, bestU}, k, state.time + dt);
  auto ops = make_stack(g, k, out.phi_over_xi.values);
  refresh_dphi_dt(out, ops);
  return out;
}

inline State step_rk4(const RunConfig& cfg, const State& state, Real dt) {
  const Grid& g = state.grid();
  const Real k = cfg.params.k;
  auto y0 = detail::pack(state, k);

  auto eval = [&](const VectorR& P, const VectorR& U, VectorR& dP, VectorR& dU) {
    VectorR prof = detail::profile_of(g, P, k);
    for (Index j = 0; j < g.n; ++j)
      if (!(prof[j] > 0.0))
        throw DegeneracyError("step_rk4: phi/xi lost positivity at node", j);
    OperatorStack ops = make_stack(g, k, prof);
    detail::apply_system(ops, P, U, dP, dU);
  };

  VectorR k1P, k1U, k2P, k2U, k3P, k3U, k4P, k4U;
  eval(y0.P, y0.U, k1P, k1U);
  eval(y0.P + 0.5 * dt * k1P, y0.U + 0.5 * dt * k1U, k2P, k2U);
  eval(y0.P + 0.5 * dt * k2P, y0.U + 0.5 * dt * k2U, k3P, k3U);
  eval(y0.P + dt * k3P, y0.U + dt * k3U, k4P, k4U);
  VectorR yP = y0.P + (dt / 6.0) * (k1P + 2.0 * k2P + 2.0 * k3P + k4P);
  VectorR yU = y0.U + (dt / 6.0) * (k1U + 2.0 * k2U + 2.0 * k3U + k4U);
  if (!yP.allFinite() || !yU.allFinite())
    throw DegeneracyError("step_rk4: non-finite update", -1);

  State out = detail::unpack(g, {yP, yU}, k, state.time + dt);
  auto ops = make_stack(g, k, out.phi_over_xi.values);
  refresh_dphi_dt(out, ops);
  return out;
}

/// One step of the configured scheme. RK4 enforces the CFL bound; midpoint
/// only reports it.
inline State step(const RunConfig& cfg, const State& state, Real dt) {
  if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
  if (cfg.scheme == Scheme::RK4) {
    RunConfig c = cfg;
    c.dt = dt;
    if (cfl_number(c, state) > 2.8)
      throw ConfigError("step: rk4 CFL bound violated; reduce dt or n");
    return step_rk4(cfg, state, dt);
  }
  return step_midpoint(cfg, state, dt);
}

struct TimeRecord {
  Real t = 0.0;
  EnergyReport energy;
  Real a_pos = 0.0;        // vacuum boundary position a(t) - a(0)
  Real u0_extrap = 0.0;    // u(t,0) by one-sided extrapolation
  Real u0_integral = 0.0;  // u(t,0) by integrating u_xi from 1 to 0
  Real u1_residual = 0.0;  // |extrapolated u(t,1)| (boundary closure check)
  Real cfl = 0.0;
};

struct BoundaryTrack {
  std::vector<Real> times;
  std::vector<Real> a_of_t;
  std::vector<Real> u_at_0;
  std::vector<Real> u_at_0_alt;
};

struct SimulationResult {
  std::vector<TimeRecord> records;
  std::vector<State> states;  // states at the recorded times
  BoundaryTrack boundary;
  Real certified_T = 0.0;
  bool truncated = false;
  std::string stop_reason = "completed";
  Real E0 = 0.0;
  Real C0 = 0.0;
  Real max_energy_ratio = 1.0;
};

/// u(t,0) by the integral route: u(0) = u(1) - int_0^1 u_xi, u(1) = 0.
inline Real u_at_zero_integral(const State& st) {
  const Grid& g = st.grid();
  VectorR du = grad(g, st.u.values);
  return -(g.weights.array() * du.array()).sum();
}

/// Evolve to T or until the certified bounds break. Every recorded step
/// checks E(t) <= 2 E(0) and phi/xi in [1/(2 C0), 2 C0]; failing runs are
/// truncated at the last certified time, never silently continued.
inline SimulationResult simulate(const RunConfig& cfg, const State& initial) {
  cfg.validate();
  const Grid& g = initial.grid();
  const Params& p = cfg.params;

  SimulationResult res;
  res.C0 = cfg.C0;
  if (res.C0 <= 0.0) {
    const Real mx = initial.phi_over_xi.values.maxCoeff();
    const Real mn = initial.phi_over_xi.values.minCoeff();
    if (!(mn > 0.0)) throw AdmissibilityError("simulate: phi0/xi must be positive");
    res.C0 = std::max(mx, 1.0 / mn);
  }

  State st = initial;
  {
    auto ops = stack_of(st, p);
    refresh_dphi_dt(st, ops);
  }

  auto record = [&](State& s) {
    auto ops = stack_of(s, p);
    TimeRecord rec;
    rec.t = s.time;
    rec.energy = energy(ops, s, p.s);
    rec.u0_extrap = extrapolate_left(g, s.u.values);
    rec.u0_integral = u_at_zero_integral(s);
    rec.u1_residual = std::abs(extrapolate_right(g, s.u.values));
    {
      RunConfig c = cfg;
      rec.cfl = cfl_number(c, s);
    }
    if (!res.boundary.times.empty()) {
      const Real t0 = res.boundary.times.back();
      const Real u0_prev = res.boundary.u_at_0.back();
      rec.a_pos = res.records.back().a_pos +
                  0.5 * (s.time - t0) * (u0_prev + rec.u0_extrap);
    }
    res.boundary.times.push_back(s.time);
    res.boundary.a_of_t.push_back(rec.a_pos);
    res.boundary.u_at_0.push_back(rec.u0_extrap);
    res.boundary.u_at_0_alt.push_back(rec.u0_integral);
    res.records.push_back(rec);
    res.states.push_back(s);
    return rec;
  };

  auto first = record(st);
  res.E0 = first.energy.full;
  if (!std::isfinite(res.E0)) throw AdmissibilityError("simulate: initial energy not finite");

  const auto nsteps = static_cast<Index>(std::round(cfg.T / cfg.dt));
  for (Index i = 0; i < nsteps; ++i) {
    try {
      st = step(cfg, st, cfg.dt);
    } catch (const DegeneracyError&) {
      if (!cfg.adapt) throw;
      res.truncated = true;
      res.stop_reason = "state degenerated";
      break;
    }
    const bool do_record = ((i + 1) % cfg.record_every == 0) || (i + 1 == nsteps);
    if (!do_record) continue;
    auto rec = record(st);
    res.max_energy_ratio = std::max(res.max_energy_ratio, rec.energy.full / res.E0);
    const bool energy_ok = rec.energy.full <= 2.0 * res.E0 * (1.0 + 1e-12);
    const bool envelope_ok = rec.energy.phi_over_xi_min >= 1.0 / (2.0 * res.C0) &&
                             rec.energy.phi_over_xi_max <= 2.0 * res.C0;
    if (!(energy_ok && envelope_ok)) {
      res.truncated = true;
      res.stop_reason = energy_ok ? "phi/xi envelope violated" : "energy bound violated";
      res.records.pop_back();
      res.states.pop_back();
      res.boundary.times.pop_back();
      res.boundary.a_of_t.pop_back();
      res.boundary.u_at_0.pop_back();
      res.boundary.u_at_0_alt.pop_back();
      break;
    }
  }
  res.certified_T = res.records.empty() ? 0.0 : res.records.back().t;
  return res;
}

/// Interface history from a recorded state series: u(t,0) by one-sided
/// extrapolation and by the integral of u_xi from 1 to 0, a(t) by
/// trapezoidal integration of the interface velocity.
inline BoundaryTrack track_boundary(const std::vector<State>& series) {
  BoundaryTrack bt;
  Real a = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const State& st = series[i];
    const Grid& g = st.grid();
    const Real u0 = extrapolate_left(g, st.u.values);
    if (i > 0)
      a += 0.5 * (st.time - series[i - 1].time) * (bt.u_at_0.back() + u0);
    bt.times.push_back(st.time);
    bt.u_at_0.push_back(u0);
    bt.u_at_0_alt.push_back(u_at_zero_integral(st));
    bt.a_of_t.push_back(a);
  }
  return bt;
}

// ---------------------------------------------------------------------------
// T_i representation diagnostics.
// ---------------------------------------------------------------------------

struct TiReport {
  // identity residuals in L2 over xi <= 0.95 (the wall cells carry the weak
  // boundary closure, not the pointwise identity)
  Real residual_i2 = 0.0;  // (V*)^2(xi^k u) = T2 + V(xi^k phi) phi_t/phi
  Real residual_i3 = 0.0;  // (V*)^3(xi^k u) = T3 + (V)^2(xi^k phi) phi_t/phi
  // boundedness observables in the forms the estimates assert:
  // sup |T2/xi^k|, sup |T3/xi^{ceil(k)-1}|, then ||T_i/xi^{ceil(k)+3-i}||_L2
  // for i >= 4
  std::vector<Real> weighted_Ti;
};

inline TiReport ti_diagnostics(const OperatorStack& ops, const State& st, int i_max) {
  if (!ops.has_dphi()) throw Error("ti_diagnostics: dphi_dt cache missing");
  const Grid& g = *ops.grid;
  const Real k = ops.k;
  const int ck = ceil_int(k);

  // ratio = phi_t / phi, smooth up to the vacuum point
  VectorR ratio =
      ops.dphi_dt->array() / (ops.phi_over_xi.array() * g.nodes.array());
  VectorR dratio = grad(g, ratio);

  // T2 = (phi^{2k+1}/xi^k) d(phi_t/phi); coefficient = (phi/xi)^{2k+1} xi^{k+1}
  VectorR t2 = ops.phi_over_xi.array().pow(2 * k + 1) *
               g.nodes.array().pow(k + 1.0) * dratio.array();
  // T3 = -(1/(xi^k phi)) d[(phi^{4k+2}/xi^{2k}) d(phi_t/phi)]
  VectorR inner3 = ops.phi_over_xi.array().pow(4 * k + 2) *
                   g.nodes.array().pow(2 * k + 2.0) * dratio.array();
  VectorR t3 = -grad(g, inner3).array() /
               (g.nodes.array().pow(k + 1.0) * ops.phi_over_xi.array());

  Field xkphi = xi_k_phi(st, k);
  Field xku = xi_k_u(st, k);
  {
    auto windowed_l2 = [&](const VectorR& v) {
      Real acc = 0.0;
      for (Index j = 0; j < g.n; ++j)
        if (g.nodes[j] <= 0.95) acc += g.weights[j] * v[j] * v[j];
      return std::sqrt(acc);
    };
    Field lhs = apply_power(ops, Chain::Y, 2, xku);
    VectorR rhs = t2.array() + apply_V(ops, xkphi).values.array() * ratio.array();
    TiReport rep;
    rep.residual_i2 = windowed_l2(lhs.values - rhs);
    Field lhs3 = apply_power(ops, Chain::Y, 3, xku);
    VectorR rhs3 =
        t3.array() + apply_power(ops, Chain::X, 2, xkphi).values.array() * ratio.array();
    rep.residual_i3 = windowed_l2(lhs3.values - rhs3);

    Field ti(g, t2, 0.0);
    for (int i = 2; i <= i_max; ++i) {
      if (i == 3) ti = Field(g, t3, 0.0);
      // T_i = (V)^{i-3} T3: X-chain applications starting from T3
      if (i > 3) ti = ((i - 4) % 2 == 0) ? apply_V(ops, ti) : apply_Vstar(ops, ti);
      Field weighted(g, 0.0);
      if (i == 2) {
        weighted.values = ti.values.array() / g.nodes.array().pow(k);
        rep.weighted_Ti.push_back(norm_inf(weighted));
      } else if (i == 3) {
        weighted.values = ti.values.array() / g.nodes.array().pow(Real(ck - 1));
        rep.weighted_Ti.push_back(norm_inf(weighted));
      } else {
        weighted.values = ti.values.array() / g.nodes.array().pow(Real(ck + 3 - i));
        rep.weighted_Ti.push_back(norm_l2(weighted));
      }
    }
    return rep;
  }
}

}  // namespace pvac

#endif  // PVAC_EVOLUTION_HPP
