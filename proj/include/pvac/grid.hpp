#ifndef PVAC_GRID_HPP
#define PVAC_GRID_HPP

#include "pvac/common.hpp"

#include <memory>

namespace pvac {

/// Graded cell mesh on (0,1]. Faces are eta_i = (i/n)^p, nodes are the mapped
/// midpoints xi_j = ((j-1/2)/n)^p, quadrature weights are the cell widths
/// (mapped midpoint rule). No node sits at xi=0 or xi=1; boundary values are
/// reached through one-sided extrapolation closures.
template <class Scalar>
struct BasicGrid {
  Index n = 0;
  Scalar grading = 1;
  Vector<Scalar> faces;   // n+1 values, faces[0]=0, faces[n]=1
  Vector<Scalar> nodes;   // n values in (0,1)
  Vector<Scalar> weights; // n positive values, sum = 1

  Scalar min_spacing() const {
    Scalar h = weights[0];
    for (Index j = 1; j < n; ++j) h = std::min(h, weights[j]);
    return h;
  }
};

using Grid = BasicGrid<Real>;

template <class Scalar>
BasicGrid<Scalar> make_grid(Index n, Scalar grading_exponent) {
  if (n < 8) throw ConfigError("make_grid: need at least 8 cells");
  if (!(grading_exponent >= 1)) throw ConfigError("make_grid: grading exponent must be >= 1");
  BasicGrid<Scalar> g;
  g.n = n;
  g.grading = grading_exponent;
  g.faces.resize(n + 1);
  g.nodes.resize(n);
  g.weights.resize(n);
  for (Index i = 0; i <= n; ++i)
    g.faces[i] = std::pow(Scalar(i) / Scalar(n), grading_exponent);
  g.faces[n] = Scalar(1);
  for (Index j = 0; j < n; ++j) {
    g.nodes[j] = std::pow((Scalar(j) + Scalar(0.5)) / Scalar(n), grading_exponent);
    g.weights[j] = g.faces[j + 1] - g.faces[j];
  }
  return g;
}

inline Grid make_grid(Index n, Real grading_exponent = 1.0) {
  return make_grid<Real>(n, grading_exponent);
}

/// Default grading for resolving xi^k-weighted quantities (tunable).
inline Real default_grading(Real k) { return k <= 2.0 ? 2.0 : 3.0; }

/// Grid function with a declared vanishing order at xi=0 (for safe division
/// by xi^m) and a boundary-residual flag set by operator applications that
/// feed a nonzero-at-xi=1 function into an adjoint (diagnostic mode).
/// Holds a reference to its grid; the grid must outlive the field.
template <class Scalar>
struct BasicField {
  const BasicGrid<Scalar>* grid = nullptr;
  Vector<Scalar> values;
  Scalar vanish_order = 0;
  Scalar boundary_flag = 0;

  BasicField() = default;
  BasicField(const BasicGrid<Scalar>& g, Scalar vo = 0)
      : grid(&g), values(Vector<Scalar>::Zero(g.n)), vanish_order(vo) {}
  BasicField(const BasicGrid<Scalar>& g, Vector<Scalar> v, Scalar vo = 0)
      : grid(&g), values(std::move(v)), vanish_order(vo) {
    if (values.size() != g.n) throw ShapeError("Field: value count does not match grid");
  }

  Index size() const { return grid ? grid->n : 0; }

  template <class Fn>
  static BasicField sample(const BasicGrid<Scalar>& g, Fn&& fn, Scalar vo = 0) {
    BasicField f(g, vo);
    for (Index j = 0; j < g.n; ++j) f.values[j] = fn(g.nodes[j]);
    return f;
  }
};

using Field = BasicField<Real>;

template <class Scalar>
void require_same_grid(const BasicField<Scalar>& a, const BasicField<Scalar>& b) {
  if (a.grid == nullptr || b.grid == nullptr || a.grid != b.grid)
    throw ShapeError("fields live on different grids");
}

/// Weighted L2 pairing: quadrature approximation of the integral of f*g over (0,1).
template <class Scalar>
Scalar inner(const BasicField<Scalar>& f, const BasicField<Scalar>& g) {
  require_same_grid(f, g);
  return (f.grid->weights.array() * f.values.array() * g.values.array()).sum();
}

template <class Scalar>
Scalar norm_l2(const BasicField<Scalar>& f) {
  return std::sqrt((f.grid->weights.array() * f.values.array().square()).sum());
}

template <class Scalar>
Scalar norm_inf(const BasicField<Scalar>& f) {
  return f.values.template lpNorm<Eigen::Infinity>();
}

/// Pointwise f / xi^m. Requires declared vanish_order >= m unless the caller
/// overrides (diagnostic mode); this is the machine-checkable hypothesis of
/// the weighted-division estimate.
template <class Scalar>
BasicField<Scalar> divide_by_xi_pow(const BasicField<Scalar>& f, Scalar m,
                                    bool override_check = false) {
  if (m < 0) throw WeightedDivisionError("divide_by_xi_pow: negative exponent");
  if (f.vanish_order < m - Scalar(1e-12) && !override_check)
    throw WeightedDivisionError(
        "divide_by_xi_pow: declared vanish_order insufficient for xi^-m");
  BasicField<Scalar> out = f;
  out.values.array() /= f.grid->nodes.array().pow(m);
  out.vanish_order = std::max<Scalar>(f.vanish_order - m, 0);
  return out;
}

template <class Scalar>
BasicField<Scalar> multiply_by_xi_pow(const BasicField<Scalar>& f, Scalar m) {
  BasicField<Scalar> out = f;
  out.values.array() *= f.grid->nodes.array().pow(m);
  out.vanish_order = f.vanish_order + m;
  return out;
}

}  // namespace pvac

#endif  // PVAC_GRID_HPP
