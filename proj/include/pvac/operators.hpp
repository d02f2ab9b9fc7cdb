#ifndef PVAC_OPERATORS_HPP
#define PVAC_OPERATORS_HPP

#include "pvac/grid.hpp"

#include <array>
#include <optional>

namespace pvac {

// ---------------------------------------------------------------------------
// Difference machinery shared by all weighted operators.
//
// Flux form: (Dflux q)_j = (qhat_{j+1} - qhat_j) / w_j with arithmetic-mean
// interior face values, zero flux at the vacuum face xi=0 (legitimate for the
// conserved quantities phi^{2k} xi^{-k} f, which vanish there) and quadratic
// extrapolation at xi=1. The arithmetic mean makes the discrete integration
// by parts exact: the quadrature-weighted transpose of Dflux differs from
// -Dflux only by boundary functionals, which is what makes the adjoint pair
// below exact and the zeroth energy conserved.
//
// Gradient form: plain 3-point nonuniform stencils for pointwise d/dxi of
// smooth functions (used in identity residuals and reconstruction sources).
// ---------------------------------------------------------------------------

/// Quadratic extrapolation weights from three abscissae to a target point.
template <class Scalar>
std::array<Scalar, 3> lagrange3(Scalar x0, Scalar x1, Scalar x2, Scalar xt) {
  return {(xt - x1) * (xt - x2) / ((x0 - x1) * (x0 - x2)),
          (xt - x0) * (xt - x2) / ((x1 - x0) * (x1 - x2)),
          (xt - x0) * (xt - x1) / ((x2 - x0) * (x2 - x1))};
}

/// Value of the node function extrapolated to xi=1 (the boundary closure).
template <class Scalar>
Scalar extrapolate_right(const BasicGrid<Scalar>& g, const Vector<Scalar>& v) {
  const Index n = g.n;
  auto c = lagrange3(g.nodes[n - 3], g.nodes[n - 2], g.nodes[n - 1], Scalar(1));
  return c[0] * v[n - 3] + c[1] * v[n - 2] + c[2] * v[n - 1];
}

/// Value of the node function extrapolated to xi=0.
template <class Scalar>
Scalar extrapolate_left(const BasicGrid<Scalar>& g, const Vector<Scalar>& v) {
  auto c = lagrange3(g.nodes[0], g.nodes[1], g.nodes[2], Scalar(0));
  return c[0] * v[0] + c[1] * v[1] + c[2] * v[2];
}

/// Discrete geometry adapted to the vacuum degeneracy.
///
/// The nodal representation of the weight xi^k is mu with
///   mu_j^2 = (z(face_{j+1}) - z(face_j)) / ((2k+1) w_j),  z = xi^{2k+1},
/// which agrees with xi^k to O(h^2) away from the vacuum. Face values of
/// fluxes are interpolated with weights theta that are exact on the discrete
/// model flux q_j = xi_j mu_j^2 (the image of the canonical profile
/// phi = c xi). With the outer scaling atilde = 1/mu this makes the pair
///   V(mu xi c) = (2k+1) c^{2k+1} mu   and   V*(mu c) = 0
/// hold exactly at every cell, i.e. the discretization is exact on the local
/// vacuum structure. Plain nodal weights instead put O(1) relative errors in
/// the first graded cells which the evolution amplifies by xi^{-k}.
template <class Scalar>
struct FluxScheme {
  Vector<Scalar> mu;       // discrete xi^k weight
  Vector<Scalar> theta;    // n-1 interior face weights
  Vector<Scalar> atilde;   // outer scaling = 1/mu
  std::array<Scalar, 3> t_right{};  // extrapolation to xi=1

  static FluxScheme make(const BasicGrid<Scalar>& g, Scalar k) {
    const Index n = g.n;
    const Scalar m = 2 * k + 1;
    FluxScheme fs;
    fs.mu.resize(n);
    fs.atilde.resize(n);
    for (Index j = 0; j < n; ++j) {
      const Scalar dz = std::pow(g.faces[j + 1], m) - std::pow(g.faces[j], m);
      fs.mu[j] = std::sqrt(dz / (m * g.weights[j]));
      fs.atilde[j] = Scalar(1) / fs.mu[j];
    }
    fs.theta.resize(n - 1);
    for (Index i = 0; i + 1 < n; ++i) {
      const Scalar ql = g.nodes[i] * fs.mu[i] * fs.mu[i];
      const Scalar qr = g.nodes[i + 1] * fs.mu[i + 1] * fs.mu[i + 1];
      const Scalar qf = std::pow(g.faces[i + 1], m);
      fs.theta[i] = (qr - qf) / (qr - ql);
    }
    fs.t_right = lagrange3(g.nodes[n - 3], g.nodes[n - 2], g.nodes[n - 1], Scalar(1));
    return fs;
  }
};

/// Discrete xi^k weight used in all state packings.
template <class Scalar>
Vector<Scalar> discrete_xi_pow_k(const BasicGrid<Scalar>& g, Scalar k) {
  const Scalar m = 2 * k + 1;
  Vector<Scalar> mu(g.n);
  for (Index j = 0; j < g.n; ++j) {
    const Scalar dz = std::pow(g.faces[j + 1], m) - std::pow(g.faces[j], m);
    mu[j] = std::sqrt(dz / (m * g.weights[j]));
  }
  return mu;
}

/// Flux-form difference of a node function (zero flux at xi=0).
template <class Scalar>
Vector<Scalar> flux_diff(const BasicGrid<Scalar>& g, const FluxScheme<Scalar>& fs,
                         const Vector<Scalar>& q) {
  const Index n = g.n;
  Vector<Scalar> out(n);
  Scalar qprev = 0;  // face 0
  for (Index j = 0; j < n; ++j) {
    Scalar qnext;
    if (j + 1 < n) {
      const Scalar t = fs.theta[j];  // face j+1 between cells j and j+1
      qnext = t * q[j] + (1 - t) * q[j + 1];
    } else {
      qnext = fs.t_right[0] * q[n - 3] + fs.t_right[1] * q[n - 2] +
              fs.t_right[2] * q[n - 1];
    }
    out[j] = (qnext - qprev) / g.weights[j];
    qprev = qnext;
  }
  return out;
}

/// Quadrature-weighted transpose of flux_diff: W^{-1} Dflux^T W.
template <class Scalar>
Vector<Scalar> flux_diff_transpose(const BasicGrid<Scalar>& g,
                                   const FluxScheme<Scalar>& fs,
                                   const Vector<Scalar>& r) {
  const Index n = g.n;
  Vector<Scalar> out = Vector<Scalar>::Zero(n);
  for (Index i = 1; i < n; ++i) {  // interior face i between cells i-1 and i
    const Scalar y = r[i - 1] - r[i];
    const Scalar t = fs.theta[i - 1];
    out[i - 1] += t * y;
    out[i] += (1 - t) * y;
  }
  const Scalar yn = r[n - 1];  // face n
  out[n - 3] += fs.t_right[0] * yn;
  out[n - 2] += fs.t_right[1] * yn;
  out[n - 1] += fs.t_right[2] * yn;
  out.array() /= g.weights.array();
  return out;
}

/// Pointwise derivative by 3-point nonuniform stencils (one-sided at ends).
template <class Scalar>
Vector<Scalar> grad(const BasicGrid<Scalar>& g, const Vector<Scalar>& u) {
  const Index n = g.n;
  Vector<Scalar> out(n);
  auto stencil = [&](Index j0, Index jt) {
    const Scalar x0 = g.nodes[j0], x1 = g.nodes[j0 + 1], x2 = g.nodes[j0 + 2];
    const Scalar xt = g.nodes[jt];
    // derivative of the quadratic through (x0,x1,x2) evaluated at xt
    const Scalar c0 = (2 * xt - x1 - x2) / ((x0 - x1) * (x0 - x2));
    const Scalar c1 = (2 * xt - x0 - x2) / ((x1 - x0) * (x1 - x2));
    const Scalar c2 = (2 * xt - x0 - x1) / ((x2 - x0) * (x2 - x1));
    return c0 * u[j0] + c1 * u[j0 + 1] + c2 * u[j0 + 2];
  };
  out[0] = stencil(0, 0);
  for (Index j = 1; j < n - 1; ++j) out[j] = stencil(j - 1, j);
  out[n - 1] = stencil(n - 3, n - 1);
  return out;
}

template <class Scalar>
BasicField<Scalar> grad(const BasicField<Scalar>& f) {
  BasicField<Scalar> out(*f.grid, std::max<Scalar>(f.vanish_order - 1, 0));
  out.values = grad(*f.grid, f.values);
  return out;
}

// ---------------------------------------------------------------------------
// OperatorStack: discrete V, V*, their commutators and powers for a frozen
// profile phi. The adjoint is exact by construction:
//   inner(V f, g) == inner(f, Vstar g)  for all grid functions,
// while apply_Vstar_analytic keeps the finite-difference form of V* as an
// independent cross-check (agrees weakly to O(h^2)).
// ---------------------------------------------------------------------------

template <class Scalar>
struct BasicOperatorStack {
  const BasicGrid<Scalar>* grid = nullptr;
  Scalar k = 1;
  int max_power = 64;                   // order cap (s when built from Params)
  Vector<Scalar> phi_over_xi;           // profile, bounded away from 0
  std::optional<Vector<Scalar>> dphi_dt;  // cache for commutators

  Vector<Scalar> xi_pow_k;    // xi^k at nodes
  Vector<Scalar> a;           // xi^{-k} nodal (analytic forms, divisions)
  Vector<Scalar> b;           // (phi/xi)^{2k} mu (flux forms)
  Vector<Scalar> bt;          // commutator weight, bt/b = 2k dphi_dt/phi
  Vector<Scalar> b_nodal;     // (phi/xi)^{2k} xi^k (analytic forms)
  Vector<Scalar> bt_nodal;
  FluxScheme<Scalar> flux;    // shared difference core

  bool has_dphi() const { return dphi_dt.has_value(); }
};

using OperatorStack = BasicOperatorStack<Real>;

template <class Scalar>
BasicOperatorStack<Scalar> make_stack(const BasicGrid<Scalar>& g, Scalar k,
                                      const Vector<Scalar>& phi_over_xi,
                                      std::optional<Vector<Scalar>> dphi_dt = {},
                                      Scalar tracked_bound = 0, int max_power = 64) {
  if (phi_over_xi.size() != g.n) throw ShapeError("make_stack: profile size mismatch");
  for (Index j = 0; j < g.n; ++j) {
    if (!(phi_over_xi[j] > 0) || !std::isfinite(phi_over_xi[j]))
      throw DegeneracyError("make_stack: phi/xi not positive at node", j);
    if (tracked_bound > 0 &&
        (phi_over_xi[j] > tracked_bound || phi_over_xi[j] < Scalar(1) / tracked_bound))
      throw DegeneracyError("make_stack: phi/xi outside tracked bound", j);
  }
  BasicOperatorStack<Scalar> st;
  st.grid = &g;
  st.k = k;
  st.max_power = max_power;
  st.phi_over_xi = phi_over_xi;
  st.xi_pow_k = g.nodes.array().pow(k);
  st.a = g.nodes.array().pow(-k);
  st.flux = FluxScheme<Scalar>::make(g, k);
  st.b = phi_over_xi.array().pow(2 * k) * st.flux.mu.array();
  st.b_nodal = phi_over_xi.array().pow(2 * k) * st.xi_pow_k.array();
  if (dphi_dt) {
    if (dphi_dt->size() != g.n) throw ShapeError("make_stack: dphi_dt size mismatch");
    st.dphi_dt = std::move(dphi_dt);
    // bt/b = 2k dphi_dt / phi exactly
    st.bt = 2 * k * phi_over_xi.array().pow(2 * k - 1) * st.flux.mu.array() *
            st.dphi_dt->array() / g.nodes.array();
    st.bt_nodal = 2 * k * phi_over_xi.array().pow(2 * k - 1) *
                  g.nodes.array().pow(k - 1) * st.dphi_dt->array();
  }
  return st;
}

/// Homogeneous operators (phi taken as xi).
template <class Scalar>
BasicOperatorStack<Scalar> homogeneous_stack(const BasicGrid<Scalar>& g, Scalar k,
                                             int max_power = 64) {
  Vector<Scalar> ones = Vector<Scalar>::Ones(g.n);
  return make_stack(g, k, ones, {}, Scalar(0), max_power);
}

template <class Scalar>
BasicField<Scalar> apply_Vbar(const BasicGrid<Scalar>& g, Scalar k,
                              const BasicField<Scalar>& f) {
  return apply_V(homogeneous_stack(g, k), f);
}

template <class Scalar>
BasicField<Scalar> apply_Vbar_star(const BasicGrid<Scalar>& g, Scalar k,
                                   const BasicField<Scalar>& f) {
  return apply_Vstar(homogeneous_stack(g, k), f);
}

template <class Scalar>
BasicField<Scalar> apply_V(const BasicOperatorStack<Scalar>& st,
                           const BasicField<Scalar>& f) {
  if (f.grid != st.grid) throw ShapeError("apply_V: grid mismatch");
  BasicField<Scalar> out(*st.grid, std::max<Scalar>(f.vanish_order - 1, 0));
  Vector<Scalar> q = st.b.array() * f.values.array();
  out.values = st.flux.atilde.array() * flux_diff(*st.grid, st.flux, q).array();
  out.boundary_flag = f.boundary_flag;
  return out;
}

/// Adjoint-by-construction V*. Records the domain-condition residual
/// |extrapolated (xi^{-k} g)(1)| (should vanish for g with g(1)=0) as a
/// boundary warning rather than rejecting the input.
template <class Scalar>
BasicField<Scalar> apply_Vstar(const BasicOperatorStack<Scalar>& st,
                               const BasicField<Scalar>& g) {
  if (g.grid != st.grid) throw ShapeError("apply_Vstar: grid mismatch");
  BasicField<Scalar> out(*st.grid, std::max<Scalar>(g.vanish_order - 1, 0));
  Vector<Scalar> r = st.flux.atilde.array() * g.values.array();
  out.values = st.b.array() * flux_diff_transpose(*st.grid, st.flux, r).array();
  const Scalar scale = norm_l2(g) + Scalar(1e-300);
  out.boundary_flag =
      std::max(g.boundary_flag, std::abs(extrapolate_right(*st.grid, r)) / scale);
  return out;
}

/// Finite-difference form of V* (independent of the transpose construction).
template <class Scalar>
BasicField<Scalar> apply_Vstar_analytic(const BasicOperatorStack<Scalar>& st,
                                        const BasicField<Scalar>& g) {
  if (g.grid != st.grid) throw ShapeError("apply_Vstar_analytic: grid mismatch");
  BasicField<Scalar> out(*st.grid, std::max<Scalar>(g.vanish_order - 1, 0));
  Vector<Scalar> r = st.a.array() * g.values.array();
  out.values = -st.b_nodal.array() * grad(*st.grid, r).array();
  return out;
}

/// Commutator V_t(f) = 2k xi^{-k} d/dxi [phi^{2k-1} phi_t xi^{-k} f].
template <class Scalar>
BasicField<Scalar> commutator_Vt(const BasicOperatorStack<Scalar>& st,
                                 const BasicField<Scalar>& f) {
  if (!st.has_dphi()) throw Error("commutator_Vt: dphi_dt cache missing");
  if (f.grid != st.grid) throw ShapeError("commutator_Vt: grid mismatch");
  BasicField<Scalar> out(*st.grid, std::max<Scalar>(f.vanish_order - 1, 0));
  Vector<Scalar> q = st.bt.array() * f.values.array();
  out.values = st.flux.atilde.array() * flux_diff(*st.grid, st.flux, q).array();
  return out;
}

/// Commutator V_t*(g), adjoint of V_t; satisfies
/// V_t*(g) = 2k (phi_t/phi) V*(g) exactly at the discrete level.
template <class Scalar>
BasicField<Scalar> commutator_Vt_star(const BasicOperatorStack<Scalar>& st,
                                      const BasicField<Scalar>& g) {
  if (!st.has_dphi()) throw Error("commutator_Vt_star: dphi_dt cache missing");
  if (g.grid != st.grid) throw ShapeError("commutator_Vt_star: grid mismatch");
  BasicField<Scalar> out(*st.grid, std::max<Scalar>(g.vanish_order - 1, 0));
  Vector<Scalar> r = st.flux.atilde.array() * g.values.array();
  out.values = st.bt.array() * flux_diff_transpose(*st.grid, st.flux, r).array();
  const Scalar scale = norm_l2(g) + Scalar(1e-300);
  out.boundary_flag =
      std::max(g.boundary_flag, std::abs(extrapolate_right(*st.grid, r)) / scale);
  return out;
}

template <class Scalar>
BasicField<Scalar> commutator_Vt_star_analytic(const BasicOperatorStack<Scalar>& st,
                                               const BasicField<Scalar>& g) {
  if (!st.has_dphi()) throw Error("commutator_Vt_star_analytic: dphi_dt cache missing");
  BasicField<Scalar> out(*st.grid, std::max<Scalar>(g.vanish_order - 1, 0));
  Vector<Scalar> r = st.a.array() * g.values.array();
  out.values = -st.bt_nodal.array() * grad(*st.grid, r).array();
  return out;
}

enum class Chain { X, Y };  // X: powers of V acting on f; Y: powers of V* on g

/// Alternating powers: (V)^i = V(V*V)^j or (V*V)^j, (V*)^i = V*(VV*)^j or (VV*)^j.
template <class Scalar>
BasicField<Scalar> apply_power(const BasicOperatorStack<Scalar>& st, Chain which,
                               int i, const BasicField<Scalar>& f) {
  if (i < 0 || i > st.max_power)
    throw OrderError("apply_power: order " + std::to_string(i) + " exceeds cap");
  BasicField<Scalar> cur = f;
  for (int l = 0; l < i; ++l) {
    const bool use_V = (which == Chain::X) ? (l % 2 == 0) : (l % 2 == 1);
    cur = use_V ? apply_V(st, cur) : apply_Vstar(st, cur);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Sparse structure of V and V* (time-stepper blocks). The entries mirror the
// flux pipeline exactly; a unit-vector cross-check lives in the test suite.
// ---------------------------------------------------------------------------

template <class Scalar, class Triplet>
void append_triplets_V(const BasicOperatorStack<Scalar>& st, Scalar scale,
                       Index row0, Index col0, std::vector<Triplet>& out) {
  const auto& g = *st.grid;
  const auto& fs = st.flux;
  const Index n = g.n;
  auto add = [&](Index r, Index c, Scalar v) {
    out.emplace_back(row0 + r, col0 + c, scale * v);
  };
  // uhat_{i} = theta_{i-1} q_{i-1} + (1-theta_{i-1}) q_i for interior face i
  // row 0: (uhat_1 - 0) / w_0
  add(0, 0, fs.atilde[0] * fs.theta[0] * st.b[0] / g.weights[0]);
  add(0, 1, fs.atilde[0] * (1 - fs.theta[0]) * st.b[1] / g.weights[0]);
  for (Index j = 1; j < n - 1; ++j) {  // (uhat_{j+1} - uhat_j) / w_j
    const Scalar cw = fs.atilde[j] / g.weights[j];
    add(j, j - 1, -cw * fs.theta[j - 1] * st.b[j - 1]);
    add(j, j, cw * (fs.theta[j] - (1 - fs.theta[j - 1])) * st.b[j]);
    add(j, j + 1, cw * (1 - fs.theta[j]) * st.b[j + 1]);
  }
  const Scalar cw = fs.atilde[n - 1] / g.weights[n - 1];
  add(n - 1, n - 3, cw * fs.t_right[0] * st.b[n - 3]);
  add(n - 1, n - 2, cw * (fs.t_right[1] - fs.theta[n - 2]) * st.b[n - 2]);
  add(n - 1, n - 1, cw * (fs.t_right[2] - (1 - fs.theta[n - 2])) * st.b[n - 1]);
}

/// V* = W^{-1} V^T W entry-wise: Vstar[j][i] = (w_i / w_j) V[i][j].
template <class Scalar, class Triplet>
void append_triplets_Vstar(const BasicOperatorStack<Scalar>& st, Scalar scale,
                           Index row0, Index col0, std::vector<Triplet>& out) {
  std::vector<Triplet> vt;
  append_triplets_V(st, Scalar(1), 0, 0, vt);
  const auto& w = st.grid->weights;
  for (const auto& t : vt)
    out.emplace_back(row0 + t.col(), col0 + t.row(),
                     scale * t.value() * w[t.row()] / w[t.col()]);
}

// ---------------------------------------------------------------------------
// Dense matrix views (spectral diagnostics, coordinate dumps, solver blocks).
// ---------------------------------------------------------------------------

template <class Scalar, class Apply>
Matrix<Scalar> assemble_dense(const BasicGrid<Scalar>& g, Apply&& apply) {
  Matrix<Scalar> M(g.n, g.n);
  Vector<Scalar> e = Vector<Scalar>::Zero(g.n);
  for (Index j = 0; j < g.n; ++j) {
    e[j] = 1;
    M.col(j) = apply(e);
    e[j] = 0;
  }
  return M;
}

template <class Scalar>
Matrix<Scalar> dense_V(const BasicOperatorStack<Scalar>& st) {
  return assemble_dense(*st.grid, [&](const Vector<Scalar>& v) -> Vector<Scalar> {
    Vector<Scalar> q = st.b.array() * v.array();
    return (st.flux.atilde.array() * flux_diff(*st.grid, st.flux, q).array()).matrix();
  });
}

template <class Scalar>
Matrix<Scalar> dense_Vstar(const BasicOperatorStack<Scalar>& st) {
  return assemble_dense(*st.grid, [&](const Vector<Scalar>& v) -> Vector<Scalar> {
    Vector<Scalar> r = st.flux.atilde.array() * v.array();
    return (st.b.array() * flux_diff_transpose(*st.grid, st.flux, r).array()).matrix();
  });
}

/// Smallest singular value of V in the weighted-L2 geometry (trivial kernel check).
template <class Scalar>
Scalar smallest_singular_value_V(const BasicOperatorStack<Scalar>& st) {
  Matrix<Scalar> M = dense_V(st);
  Vector<Scalar> sqw = st.grid->weights.array().sqrt();
  M = sqw.asDiagonal() * M * sqw.cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Matrix<Scalar>> svd(M);
  return svd.singularValues().tail(1)(0);
}

// ---------------------------------------------------------------------------
// Identity residual suite (product rules and commutator closed forms).
// ---------------------------------------------------------------------------

struct IdentityResidual {
  std::string name;
  Real l2 = 0;   // weighted L2 over the fixed window xi in [0.02, 0.95]
  Real max = 0;  // max norm over the same window
};

/// Residuals are measured away from the closure cells: the pointwise
/// identities hold in the interior, while the first graded cells and the
/// wall cells carry the scheme's boundary structure.
template <class Scalar>
IdentityResidual residual_of(const std::string& name, const BasicField<Scalar>& lhs,
                             const BasicField<Scalar>& rhs) {
  const auto& g = *lhs.grid;
  Scalar acc = 0, mx = 0;
  for (Index j = 0; j < g.n; ++j) {
    if (g.nodes[j] < Scalar(0.02) || g.nodes[j] > Scalar(0.95)) continue;
    const Scalar d = lhs.values[j] - rhs.values[j];
    acc += g.weights[j] * d * d;
    mx = std::max(mx, std::abs(d));
  }
  return {name, std::sqrt(acc), mx};
}

/// Left/right sides of the product-rule identities evaluated on test fields
/// (f, g smooth with enough vanishing at both ends, h smooth).
template <class Scalar>
std::vector<IdentityResidual> product_rule_residuals(
    const BasicOperatorStack<Scalar>& st, const BasicField<Scalar>& f,
    const BasicField<Scalar>& g, const BasicField<Scalar>& h) {
  const auto& grid = *st.grid;
  const Scalar k = st.k;
  std::vector<IdentityResidual> out;

  auto field = [&](Vector<Scalar> v, Scalar vo) {
    return BasicField<Scalar>(grid, std::move(v), vo);
  };
  const Vector<Scalar> w2k = st.phi_over_xi.array().pow(2 * k);  // (phi/xi)^{2k}
  const Vector<Scalar> phi = st.phi_over_xi.array() * grid.nodes.array();
  const BasicField<Scalar> xikphi = field(st.xi_pow_k.array() * phi.array(), k + 1);
  const Vector<Scalar> Vxikphi = apply_V(st, xikphi).values;
  const Vector<Scalar> dphi = grad(grid, phi);

  // V* f = -V f + (2k/(2k+1)) (V(xi^k phi)/xi^k) (f/phi)
  {
    auto lhs = apply_Vstar(st, f);
    Vector<Scalar> rhs = -apply_V(st, f).values.array() +
                         (2 * k / (2 * k + 1)) * Vxikphi.array() * st.a.array() *
                             f.values.array() / phi.array();
    out.push_back(residual_of("Vstar_f_vs_minusVf", lhs, field(rhs, 0)));
  }
  // V g = -V* g + (2k/(2k+1)) (V(xi^k phi)/xi^k) (g/phi)
  {
    auto lhs = apply_V(st, g);
    Vector<Scalar> rhs = -apply_Vstar(st, g).values.array() +
                         (2 * k / (2 * k + 1)) * Vxikphi.array() * st.a.array() *
                             g.values.array() / phi.array();
    out.push_back(residual_of("Vg_vs_minusVstarg", lhs, field(rhs, 0)));
  }
  // V(f h) = V(f) h + f (phi/xi)^{2k} h'
  {
    BasicField<Scalar> fh = field(f.values.array() * h.values.array(), f.vanish_order);
    auto lhs = apply_V(st, fh);
    Vector<Scalar> rhs = apply_V(st, f).values.array() * h.values.array() +
                         f.values.array() * w2k.array() * grad(grid, h.values).array();
    out.push_back(residual_of("V_product", lhs, field(rhs, 0)));
  }
  // V*(g h) = V*(g) h - g (phi/xi)^{2k} h'
  {
    BasicField<Scalar> gh = field(g.values.array() * h.values.array(), g.vanish_order);
    auto lhs = apply_Vstar(st, gh);
    Vector<Scalar> rhs = apply_Vstar(st, g).values.array() * h.values.array() -
                         g.values.array() * w2k.array() * grad(grid, h.values).array();
    out.push_back(residual_of("Vstar_product", lhs, field(rhs, 0)));
  }
  // (phi/xi)^{2k} h' = V h + k (phi/xi)^{2k} (1/xi - 2 phi'/phi) h
  {
    Vector<Scalar> lhs = w2k.array() * grad(grid, h.values).array();
    Vector<Scalar> rhs =
        apply_V(st, h).values.array() +
        k * w2k.array() *
            (grid.nodes.array().inverse() - 2 * dphi.array() / phi.array()) *
            h.values.array();
    out.push_back(residual_of("weighted_grad_via_V", field(lhs, 0), field(rhs, 0)));
  }
  // (phi/xi)^{2k} h' = -V* h + k (phi/xi)^{2k} h/xi
  {
    Vector<Scalar> lhs = w2k.array() * grad(grid, h.values).array();
    Vector<Scalar> rhs = -apply_Vstar(st, h).values.array() +
                         k * w2k.array() * h.values.array() / grid.nodes.array();
    out.push_back(residual_of("weighted_grad_via_Vstar", field(lhs, 0), field(rhs, 0)));
  }
  // (phi/xi)^{2k} (fg)' = V(f) g - f V*(g) + 2k (phi/xi)^{2k} (1/xi - phi'/phi) f g
  {
    Vector<Scalar> fg = f.values.array() * g.values.array();
    Vector<Scalar> lhs = w2k.array() * grad(grid, fg).array();
    Vector<Scalar> rhs =
        apply_V(st, f).values.array() * g.values.array() -
        f.values.array() * apply_Vstar(st, g).values.array() +
        2 * k * w2k.array() *
            (grid.nodes.array().inverse() - dphi.array() / phi.array()) * fg.array();
    out.push_back(residual_of("leibniz_fg", field(lhs, 0), field(rhs, 0)));
  }
  return out;
}

/// Homogeneous product rule: Vbar* f = -Vbar f + 2k f/xi (and Leibniz forms).
template <class Scalar>
std::vector<IdentityResidual> homogeneous_rule_residuals(const BasicGrid<Scalar>& grid,
                                                         Scalar k,
                                                         const BasicField<Scalar>& f,
                                                         const BasicField<Scalar>& h) {
  auto st = homogeneous_stack(grid, k);
  std::vector<IdentityResidual> out;
  {
    auto lhs = apply_Vstar(st, f);
    Vector<Scalar> rhs = -apply_V(st, f).values.array() +
                         2 * k * f.values.array() / grid.nodes.array();
    out.push_back(residual_of("Vbarstar_vs_minusVbar",
                              lhs, BasicField<Scalar>(grid, rhs, Scalar(0))));
  }
  {
    BasicField<Scalar> fh(grid,
                          (f.values.array() * h.values.array()).matrix(),
                          f.vanish_order);
    auto lhs = apply_V(st, fh);
    Vector<Scalar> rhs = apply_V(st, f).values.array() * h.values.array() +
                         f.values.array() * grad(grid, h.values).array();
    out.push_back(
        residual_of("Vbar_product", lhs, BasicField<Scalar>(grid, rhs, Scalar(0))));
  }
  return out;
}

/// Commutator closed forms. The transpose-constructed pair satisfies both
/// identities exactly; the *_analytic variants measure the O(h^2) agreement
/// of the two discretization routes.
template <class Scalar>
std::vector<IdentityResidual> commutator_residuals(const BasicOperatorStack<Scalar>& st,
                                                   const BasicField<Scalar>& g,
                                                   bool analytic_route) {
  if (!st.has_dphi()) throw Error("commutator_residuals: dphi_dt cache missing");
  std::vector<IdentityResidual> out;
  const Vector<Scalar> ratio =
      st.dphi_dt->array() / (st.phi_over_xi.array() * st.grid->nodes.array());
  {
    auto lhs = analytic_route ? commutator_Vt_star_analytic(st, g)
                              : commutator_Vt_star(st, g);
    Vector<Scalar> rhs =
        2 * st.k * ratio.array() * apply_Vstar(st, g).values.array();
    out.push_back(residual_of("Vt_star_closed_form", lhs,
                              BasicField<Scalar>(*st.grid, rhs, Scalar(0))));
  }
  {
    auto inner_vts = analytic_route ? commutator_Vt_star_analytic(st, g)
                                    : commutator_Vt_star(st, g);
    auto lhs = apply_V(st, inner_vts);
    auto rhs = commutator_Vt(st, apply_Vstar(st, g));
    out.push_back(residual_of("VVt_star_vs_VtVstar", lhs, rhs));
  }
  return out;
}

}  // namespace pvac

#endif  // PVAC_OPERATORS_HPP
