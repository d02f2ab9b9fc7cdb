#ifndef PVAC_VERIFY_HPP
#define PVAC_VERIFY_HPP

#include "pvac/norms.hpp"
#include "pvac/operators.hpp"

#include <sstream>

namespace pvac {

struct CheckResult {
  std::string name;
  bool pass = false;
  Real measured = 0.0;
  std::string note;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace verify_detail {

/// Smooth bounded profile for the operator stacks, flat at xi = 1 (so that
/// the evolved hierarchy's boundary conditions hold) and constant near the
/// vacuum; spread controls the envelope.
inline VectorR test_profile(const Grid& g, Real spread) {
  VectorR prof(g.n);
  for (Index j = 0; j < g.n; ++j) {
    const Real x = g.nodes[j];
    prof[j] = 1.0 + spread * std::sin(2.5 * x + 0.4) *
                        (1.0 - poly_cutoff(x / 0.2)) *
                        poly_cutoff((x - 0.6) / 0.4);
  }
  return prof;
}

inline Field sampled(const Grid& g, const RandomPoly& p) {
  return Field::sample(g, [&](Real x) { return p(x); }, p.m);
}

}  // namespace verify_detail

/// Adjoint identity: exact for the constructed pair over seeded random
/// (f, g) pairs with the g(1)=0 closure; the independent analytic
/// discretization of V* agrees with the transpose weakly at O(h^2),
/// measured as the pairing defect <Vf, g> - <f, V*_analytic g>.
struct AdjointnessResult {
  Real max_relative_residual = 0.0;  // constructed pair
  Real defect_coarse = 0.0;          // analytic route, n
  Real defect_fine = 0.0;            // analytic route, 2n
  Real refinement_ratio = 0.0;
};

inline AdjointnessResult adjointness_study(Real k, Index n_coarse, int npairs,
                                           std::uint64_t seed) {
  AdjointnessResult res;
  FieldSampler sampler(seed);
  std::vector<std::pair<RandomPoly, RandomPoly>> pairs;
  pairs.reserve(npairs);
  for (int t = 0; t < npairs; ++t)
    pairs.emplace_back(sampler.draw(1.0, 0), sampler.draw(1.0, 1));

  auto defect_at = [&](Index n, bool also_exact) {
    auto g = make_grid(n, default_grading(k));
    auto st = make_stack(g, k, verify_detail::test_profile(g, 0.25));
    Real worst_defect = 0.0;
    for (auto& [pf, pg] : pairs) {
      auto f = verify_detail::sampled(g, pf);
      auto gg = verify_detail::sampled(g, pg);
      auto vf = apply_V(st, f);
      if (also_exact) {
        auto vsg = apply_Vstar(st, gg);
        const Real lhs = inner(vf, gg), rhs = inner(f, vsg);
        const Real scale =
            norm_l2(vf) * norm_l2(gg) + norm_l2(f) * norm_l2(vsg) + 1e-300;
        res.max_relative_residual =
            std::max(res.max_relative_residual, std::abs(lhs - rhs) / scale);
      }
      auto vsag = apply_Vstar_analytic(st, gg);
      const Real defect = std::abs(inner(vf, gg) - inner(f, vsag));
      worst_defect = std::max(worst_defect, defect);
    }
    return worst_defect;
  };
  res.defect_coarse = defect_at(n_coarse, true);
  res.defect_fine = defect_at(2 * n_coarse, false);
  res.refinement_ratio = res.defect_coarse / res.defect_fine;
  return res;
}

/// Hardy and Sobolev-embedding measured ratios over seeded fields; the
/// maxima must be finite and refinement-stable.
struct RatioStudy {
  Real max_coarse = 0.0;
  Real max_fine = 0.0;
  Real relative_change = 0.0;
};

inline RatioStudy hardy_f_study(Real k, Index n_coarse, int nfields,
                                std::uint64_t seed) {
  FieldSampler sampler(seed);
  std::vector<RandomPoly> fields;
  for (int t = 0; t < nfields; ++t) fields.push_back(sampler.draw(1.0, 2));
  auto max_at = [&](Index n) {
    auto g = make_grid(n, default_grading(k));
    auto st = make_stack(g, k, verify_detail::test_profile(g, 0.25));
    const Real xiphi =
        std::pow((1.0 / st.phi_over_xi.array()).maxCoeff(), 2.0 * k);
    Real worst = 0.0;
    for (auto& p : fields) {
      auto f = verify_detail::sampled(g, p);
      const Real num = norm_l2(divide_by_xi_pow(f, 1.0));
      const Real den = xiphi * norm_l2(apply_V(st, f)) + 1e-300;
      worst = std::max(worst, num / den);
    }
    return worst;
  };
  RatioStudy rs;
  rs.max_coarse = max_at(n_coarse);
  rs.max_fine = max_at(2 * n_coarse);
  rs.relative_change = std::abs(rs.max_fine - rs.max_coarse) / rs.max_coarse;
  return rs;
}

inline RatioStudy hardy_g_study(Real k, Index n_coarse, int nfields,
                                std::uint64_t seed) {
  FieldSampler sampler(seed);
  std::vector<RandomPoly> fields;
  for (int t = 0; t < nfields; ++t) fields.push_back(sampler.draw(1.0, 3));
  auto max_at = [&](Index n) {
    auto g = make_grid(n, default_grading(k));
    auto st = make_stack(g, k, verify_detail::test_profile(g, 0.25));
    const Real xiphi =
        std::pow((1.0 / st.phi_over_xi.array()).maxCoeff(), 2.0 * k);
    Real worst = 0.0;
    for (auto& p : fields) {
      auto f = verify_detail::sampled(g, p);
      const Real num = norm_l2(divide_by_xi_pow(f, 1.0));
      const Real den = xiphi * norm_l2(apply_Vstar(st, f)) + 1e-300;
      worst = std::max(worst, num / den);
    }
    return worst;
  };
  RatioStudy rs;
  rs.max_coarse = max_at(n_coarse);
  rs.max_fine = max_at(2 * n_coarse);
  rs.relative_change = std::abs(rs.max_fine - rs.max_coarse) / rs.max_coarse;
  return rs;
}

/// || g / xi^k ||_inf <= C4 || g ||_{Y^{k, ceil(k)+1}} with the measured
/// ratio stable under refinement. Fields vanish fast enough at both ends for
/// every power in the chain to sit in the operator domain.
inline RatioStudy sobolev_study(Real k, Index n_coarse, int nfields,
                                std::uint64_t seed) {
  const int order = ceil_int(k) + 1;
  FieldSampler sampler(seed);
  std::vector<RandomPoly> fields;
  for (int t = 0; t < nfields; ++t)
    fields.push_back(sampler.draw(k + 1.0, order + 3));
  auto max_at = [&](Index n) {
    auto g = make_grid(n, default_grading(k));
    auto st = make_stack(g, k, verify_detail::test_profile(g, 0.25), {}, 0.0, 16);
    Real worst = 0.0;
    for (auto& p : fields) {
      auto f = verify_detail::sampled(g, p);
      const Real num = norm_inf(divide_by_xi_pow(f, k));
      const Real den = space_norm(st, Chain::Y, order, f) + 1e-300;
      worst = std::max(worst, num / den);
    }
    return worst;
  };
  RatioStudy rs;
  rs.max_coarse = max_at(n_coarse);
  rs.max_fine = max_at(2 * n_coarse);
  rs.relative_change = std::abs(rs.max_fine - rs.max_coarse) / rs.max_coarse;
  return rs;
}

/// Product-rule and commutator identity residuals with their refinement ratio.
struct ResidualStudy {
  Real worst_coarse = 0.0;
  Real worst_fine = 0.0;
  Real refinement_ratio = 0.0;
  Real exact_route_residual = 0.0;  // identities exact for the transpose pair
};

inline ResidualStudy identity_study(Real k, Index n_coarse, std::uint64_t seed) {
  FieldSampler sampler(seed);
  auto pf = sampler.draw(2.0, 4);
  auto pg = sampler.draw(2.0, 4);
  auto ph = sampler.draw(2.0, 4);
  ResidualStudy rs;
  auto worst_at = [&](Index n, bool record_exact) {
    auto g = make_grid(n, default_grading(k));
    VectorR prof = verify_detail::test_profile(g, 0.25);
    VectorR dphi(g.n);
    for (Index j = 0; j < g.n; ++j) {
      const Real x = g.nodes[j];
      dphi[j] = 0.3 * x * (1.0 - 0.4 * x) * poly_cutoff((x - 0.6) / 0.4);
    }
    auto st = make_stack(g, k, prof, std::optional<VectorR>(dphi));
    auto f = verify_detail::sampled(g, pf);
    auto gg = verify_detail::sampled(g, pg);
    auto h = verify_detail::sampled(g, ph);
    Real worst = 0.0;
    for (auto& r : product_rule_residuals(st, f, gg, h))
      worst = std::max(worst, r.l2);
    for (auto& r : homogeneous_rule_residuals(g, k, f, h))
      worst = std::max(worst, r.l2);
    for (auto& r : commutator_residuals(st, gg, true))
      worst = std::max(worst, r.l2);
    if (record_exact)
      for (auto& r : commutator_residuals(st, gg, false))
        rs.exact_route_residual = std::max(rs.exact_route_residual, r.l2);
    return worst;
  };
  rs.worst_coarse = worst_at(n_coarse, true);
  rs.worst_fine = worst_at(2 * n_coarse, false);
  rs.refinement_ratio = rs.worst_coarse / rs.worst_fine;
  return rs;
}

/// Norm equivalence between the V,V* and homogeneous norms with
/// phi/xi in [1/2, 2]; for phi = xi the ratio is 1 to roundoff.
struct EquivalenceStudy {
  Real M_coarse = 1.0;  // max(ratio, 1/ratio) over the sample
  Real M_fine = 1.0;
  Real relative_change = 0.0;
  Real homogeneous_identity = 0.0;  // |ratio - 1| for phi = xi
};

inline EquivalenceStudy equivalence_study(Real k, Index n_coarse, int nfields,
                                          std::uint64_t seed) {
  const int order = ceil_int(k);
  FieldSampler sampler(seed);
  std::vector<RandomPoly> ffields, gfields;
  for (int t = 0; t < nfields; ++t) {
    ffields.push_back(sampler.draw(k + 1.0, order + 3));
    gfields.push_back(sampler.draw(k + 1.0, order + 3));
  }
  auto M_at = [&](Index n) {
    auto g = make_grid(n, default_grading(k));
    VectorR prof(g.n);
    for (Index j = 0; j < g.n; ++j) {
      const Real x = g.nodes[j];
      // spans [0.55, 1.95] inside the admissible band [1/2, 2]
      prof[j] = 1.25 + 0.7 * std::sin(4.0 * x + 0.7) *
                           (1.0 - poly_cutoff(x / 0.2)) *
                           poly_cutoff((x - 0.6) / 0.4);
    }
    auto st = make_stack(g, k, prof, {}, 0.0, 16);
    Real M = 1.0;
    for (auto& p : ffields) {
      auto f = verify_detail::sampled(g, p);
      const Real r = norm_equivalence_ratio(st, Chain::X, order, f);
      M = std::max({M, r, 1.0 / r});
    }
    for (auto& p : gfields) {
      auto f = verify_detail::sampled(g, p);
      const Real r = norm_equivalence_ratio(st, Chain::Y, order, f);
      M = std::max({M, r, 1.0 / r});
    }
    return M;
  };
  EquivalenceStudy es;
  es.M_coarse = M_at(n_coarse);
  es.M_fine = M_at(2 * n_coarse);
  es.relative_change = std::abs(es.M_fine - es.M_coarse) / es.M_coarse;
  {
    auto g = make_grid(n_coarse, default_grading(k));
    auto st = make_stack(g, k, VectorR(VectorR::Ones(g.n)), {}, 0.0, 16);
    auto f = verify_detail::sampled(g, ffields[0]);
    es.homogeneous_identity =
        std::abs(norm_equivalence_ratio(st, Chain::X, order, f) - 1.0);
  }
  return es;
}

/// Full static property suite at the given gas exponent.
inline VerifyReport run_verify_suite(Real gamma, std::uint64_t seed) {
  const Real k = k_of_gamma(gamma);
  VerifyReport rep;
  rep.seed = seed;
  auto add = [&](const std::string& name, bool pass, Real measured,
                 const std::string& note) {
    rep.checks.push_back({name, pass, measured, note});
  };

  {
    auto a = adjointness_study(k, 128, 200, seed);
    add("adjoint_identity_exact", a.max_relative_residual <= 1e-12,
        a.max_relative_residual, "max relative residual over 200 pairs");
    add("adjoint_analytic_O_h2",
        a.refinement_ratio >= 3.5 && a.refinement_ratio <= 4.5,
        a.refinement_ratio, "pairing-defect refinement ratio, n 128 -> 256");
  }
  {
    auto g = make_grid(96, default_grading(k));
    auto st = make_stack(g, k, verify_detail::test_profile(g, 0.25));
    const Real smin = smallest_singular_value_V(st);
    add("kernel_trivial", smin > 1e-10, smin, "smallest singular value of V");
  }
  {
    auto h = hardy_f_study(k, 128, 100, seed + 1);
    add("hardy_f_ratio_stable",
        std::isfinite(h.max_coarse) && h.relative_change < 0.10, h.max_coarse,
        "max ratio; change " + std::to_string(h.relative_change));
    auto hg = hardy_g_study(k, 128, 100, seed + 2);
    add("hardy_g_ratio_stable",
        std::isfinite(hg.max_coarse) && hg.relative_change < 0.10, hg.max_coarse,
        "max ratio; change " + std::to_string(hg.relative_change));
  }
  {
    auto s = sobolev_study(k, 128, 100, seed + 3);
    add("sobolev_embedding_stable",
        std::isfinite(s.max_coarse) && s.relative_change < 0.10, s.max_coarse,
        "max ratio; change " + std::to_string(s.relative_change));
  }
  {
    auto r = identity_study(k, 128, seed + 4);
    add("product_commutator_O_h2",
        r.refinement_ratio >= 3.5 && r.refinement_ratio <= 4.5,
        r.refinement_ratio, "worst residual ratio, n 128 -> 256");
    add("commutator_exact_route", r.exact_route_residual < 1e-11,
        r.exact_route_residual, "transpose-pair closed forms");
  }
  {
    auto e = equivalence_study(k, 128, 100, seed + 5);
    add("norm_equivalence_stable", e.relative_change < 0.10, e.M_coarse,
        "M; change " + std::to_string(e.relative_change));
    add("norm_equivalence_homogeneous", e.homogeneous_identity < 1e-12,
        e.homogeneous_identity, "|ratio - 1| for phi = xi");
  }
  {
    auto g = make_grid(128, default_grading(k));
    add("quadrature_weights_sum", std::abs(g.weights.sum() - 1.0) < 1e-14,
        g.weights.sum(), "sum of weights");
  }
  return rep;
}

}  // namespace pvac

#endif  // PVAC_VERIFY_HPP
