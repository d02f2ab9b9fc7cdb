#ifndef PVAC_LINEAR_HPP
#define PVAC_LINEAR_HPP

#include "pvac/norms.hpp"
#include "pvac/operators.hpp"

#include <Eigen/Sparse>

#include <functional>

namespace pvac {

using SparseR = Eigen::SparseMatrix<Real>;
using TripletR = Eigen::Triplet<Real>;

/// Linear skew pair driven by a time-dependent background profile:
///   dG/dt = alpha * V[phi(t)] F + j1(t)
///   dF/dt = -beta * V*[phi(t)] G + j2(t)
/// with the boundary condition on G carried by the adjoint V*. Integrated by
/// the implicit midpoint rule (one sparse LU per step).
struct SkewPairProblem {
  Real alpha = 1.0;
  Real beta = 1.0;
  Real dt = 1e-3;
  Real T = 0.1;
  // background stack at time t (profile and k); must outlive the solve
  std::function<OperatorStack(Real)> stack_at;
  // sources at time t (empty vectors mean zero)
  std::function<VectorR(Real)> j1;
  std::function<VectorR(Real)> j2;
};

struct SkewPairSolution {
  std::vector<Real> times;
  std::vector<VectorR> G;
  std::vector<VectorR> F;
};

inline SkewPairSolution solve_skew_pair(const SkewPairProblem& prob,
                                        const VectorR& G0, const VectorR& F0) {
  if (!(prob.dt > 0.0)) throw ConfigError("solve_skew_pair: dt must be positive");
  if (!(prob.T > 0.0)) throw ConfigError("solve_skew_pair: T must be positive");
  const Index n = G0.size();
  const auto nsteps = static_cast<Index>(std::round(prob.T / prob.dt));

  SkewPairSolution sol;
  sol.times.reserve(nsteps + 1);
  sol.G.reserve(nsteps + 1);
  sol.F.reserve(nsteps + 1);
  sol.times.push_back(0.0);
  sol.G.push_back(G0);
  sol.F.push_back(F0);

  VectorR G = G0, F = F0;
  Eigen::SparseLU<SparseR> lu;
  for (Index step = 0; step < nsteps; ++step) {
    const Real t = step * prob.dt;
    const Real tm = t + 0.5 * prob.dt;
    OperatorStack st = prob.stack_at(tm);

    // M = [I, -c1 V; c2 V*, I], c1 = (dt/2) alpha, c2 = (dt/2) beta
    std::vector<TripletR> trips;
    trips.reserve(10 * n);
    for (Index i = 0; i < 2 * n; ++i) trips.emplace_back(i, i, 1.0);
    append_triplets_V(st, -0.5 * prob.dt * prob.alpha, 0, n, trips);
    append_triplets_Vstar(st, 0.5 * prob.dt * prob.beta, n, 0, trips);
    SparseR M(2 * n, 2 * n);
    M.setFromTriplets(trips.begin(), trips.end());
    lu.compute(M);
    if (lu.info() != Eigen::Success)
      throw Error("solve_skew_pair: sparse factorization failed");

    // rhs = Y + (dt/2) S Y + dt * J(t_mid)
    Field Ff(*st.grid, F), Gf(*st.grid, G);
    VectorR rhs(2 * n);
    rhs.head(n) = G + 0.5 * prob.dt * prob.alpha * apply_V(st, Ff).values;
    rhs.tail(n) = F - 0.5 * prob.dt * prob.beta * apply_Vstar(st, Gf).values;
    if (prob.j1) rhs.head(n) += prob.dt * prob.j1(tm);
    if (prob.j2) rhs.tail(n) += prob.dt * prob.j2(tm);

    VectorR y = lu.solve(rhs);
    if (!y.allFinite())
      throw DegeneracyError("solve_skew_pair: non-finite state at step", step);
    G = y.head(n);
    F = y.tail(n);
    sol.times.push_back(t + prob.dt);
    sol.G.push_back(G);
    sol.F.push_back(F);
  }
  return sol;
}

/// Measured stability constant sup_t ||(F,G)||_{L2} / int ||(f,g)||_{L2} dt.
inline Real stability_constant(const Grid& g, const SkewPairProblem& prob,
                               const SkewPairSolution& sol) {
  Real sup = 0.0;
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    Field Gf(g, sol.G[i]), Ff(g, sol.F[i]);
    sup = std::max(sup, std::sqrt(norm_l2(Gf) * norm_l2(Gf) +
                                  norm_l2(Ff) * norm_l2(Ff)));
  }
  Real src = 0.0;
  for (std::size_t i = 0; i + 1 < sol.times.size(); ++i) {
    const Real tm = 0.5 * (sol.times[i] + sol.times[i + 1]);
    VectorR a = prob.j1 ? prob.j1(tm) : VectorR::Zero(g.n);
    VectorR b = prob.j2 ? prob.j2(tm) : VectorR::Zero(g.n);
    Field af(g, a), bf(g, b);
    src += prob.dt * std::sqrt(norm_l2(af) * norm_l2(af) + norm_l2(bf) * norm_l2(bf));
  }
  return src > 0.0 ? sup / src : 0.0;
}

/// The duality-argument form of the pair with zero initial data:
///   dF/dt - V* G = f,  dG/dt + V F = g,  G(xi=1) = 0,  F(0) = G(0) = 0.
/// Returns the (F, G) series at the step times.
struct LinearSolution {
  std::vector<Real> times;
  std::vector<VectorR> F;
  std::vector<VectorR> G;
};

inline LinearSolution solve_linear(const std::function<OperatorStack(Real)>& stack_at,
                                   const std::function<VectorR(Real)>& f,
                                   const std::function<VectorR(Real)>& g, Real dt,
                                   Real T, Index n) {
  SkewPairProblem prob;
  prob.alpha = -1.0;
  prob.beta = -1.0;
  prob.dt = dt;
  prob.T = T;
  prob.stack_at = stack_at;
  prob.j1 = g;
  prob.j2 = f;
  VectorR zero = VectorR::Zero(n);
  auto sol = solve_skew_pair(prob, zero, zero);
  return {std::move(sol.times), std::move(sol.F), std::move(sol.G)};
}

}  // namespace pvac

#endif  // PVAC_LINEAR_HPP
