#ifndef PVAC_COMMON_HPP
#define PVAC_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvac {

using Real = double;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using VectorR = Vector<Real>;
using MatrixR = Matrix<Real>;
using Index = Eigen::Index;

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct OrderError : Error {
  using Error::Error;
};
struct AdmissibilityError : Error {
  using Error::Error;
};
struct WeightedDivisionError : Error {
  using Error::Error;
};

/// State left the positivity envelope; carries the offending node/iterate.
struct DegeneracyError : Error {
  Index where = -1;
  DegeneracyError(const std::string& msg, Index idx) : Error(msg), where(idx) {}
};

/// Non-finite value produced while assembling a norm hierarchy.
struct OverflowError : Error {
  int level = -1;
  OverflowError(const std::string& msg, int lvl) : Error(msg), level(lvl) {}
};

inline int ceil_int(Real x) { return static_cast<int>(std::ceil(x - 1e-12)); }

/// C^infty cutoff: 1 on (-inf, 0], 0 on [1, inf), all derivatives vanish at both ends.
inline Real smooth_cutoff(Real t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const Real a = std::exp(-1.0 / t);
  const Real b = std::exp(-1.0 / (1.0 - t));
  return b / (a + b);
}

/// Polynomial cutoff: 1 -> 0 across [0,1] with derivatives 1..5 vanishing at
/// both ends (degree-11 smoothstep). Far smaller high-order derivatives than
/// the exponential cutoff, which matters wherever energy levels up to
/// s = ceil(k)+3 of the data must stay moderate.
inline Real poly_cutoff(Real t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const Real t6 = std::pow(t, 6);
  const Real s = t6 * (462.0 + t * (-1980.0 + t * (3465.0 + t * (-3080.0 +
                 t * (1386.0 + t * (-252.0))))));
  return 1.0 - s;
}

/// Seeded polynomial test field: p(x) = sum c_d x^d with decaying coefficients,
/// multiplied by x^m and (1-x)^r. Evaluable at arbitrary points so the same
/// analytic function can be sampled on several grids.
struct RandomPoly {
  std::vector<Real> coef;
  Real m = 0.0;  // vanishing order at 0
  int r = 0;     // vanishing order at 1

  Real operator()(Real x) const {
    Real p = 0.0, xp = 1.0;
    for (Real c : coef) {
      p += c * xp;
      xp *= x;
    }
    return p * std::pow(x, m) * std::pow(1.0 - x, r);
  }
};

/// Draws RandomPoly instances from a seeded generator (deterministic per seed).
class FieldSampler {
 public:
  explicit FieldSampler(std::uint64_t seed) : rng_(seed) {}

  RandomPoly draw(Real vanish_order, int right_order, int degree = 6) {
    RandomPoly p;
    p.m = vanish_order;
    p.r = right_order;
    p.coef.resize(degree + 1);
    std::uniform_real_distribution<Real> u(-1.0, 1.0);
    Real scale = 1.0;
    for (auto& c : p.coef) {
      c = u(rng_) * scale;
      scale *= 0.5;
    }
    // keep the field O(1): avoid near-zero leading coefficient
    if (std::abs(p.coef[0]) < 0.1) p.coef[0] = (p.coef[0] < 0 ? -1.0 : 1.0) * 0.3;
    return p;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace pvac

#endif  // PVAC_COMMON_HPP
