// Acceptance suite: one test case per criterion, one pass/fail line each.
// Every tolerance is pinned here; nothing is deferred to calibration.

#include <doctest.h>

#include "pvac/io.hpp"
#include "pvac/picard.hpp"
#include "pvac/verify.hpp"

#include <cstdio>
#include <memory>

using namespace pvac;

namespace {

constexpr std::uint64_t kSeed = 20240815u;

struct Line {
  int id;
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!ok) detail += (detail.empty() ? "" : "; ") + what;
    CHECK(ok);
  }
  ~Line() {
    std::printf("[criterion %2d] %s%s%s\n", id, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " - ", detail.c_str());
    std::fflush(stdout);
  }
};

Real zeroth_drift(const SimulationResult& res) {
  const Real z0 = res.records.front().energy.zeroth;
  Real worst = 0.0;
  for (const auto& r : res.records)
    worst = std::max(worst, std::abs(r.energy.zeroth - z0) / z0);
  return worst;
}

}  // namespace

TEST_CASE("criterion 1: adjoint identity") {
  Line line{1};
  auto a = adjointness_study(1.0, 128, 200, kSeed);
  line.require(a.max_relative_residual <= 1e-12,
               "constructed-pair residual " + std::to_string(a.max_relative_residual));
  line.require(a.refinement_ratio >= 3.5 && a.refinement_ratio <= 4.5,
               "analytic-route ratio " + std::to_string(a.refinement_ratio));
  line.detail = "exact residual " + std::to_string(a.max_relative_residual) +
                ", analytic O(h^2) ratio " + std::to_string(a.refinement_ratio);
}

TEST_CASE("criterion 2: zeroth-energy conservation") {
  Line line{2};
  auto sc = builtin_scenarios()[0];
  sc.n = 256;
  auto g = scenario_grid(sc);
  auto cfg = run_config(sc);
  cfg.dt = 1e-3;
  cfg.T = 0.1;
  cfg.record_every = 10;
  auto res = simulate(cfg, initial_state(sc, g));
  line.require(!res.truncated, "midpoint run truncated before T = 0.1");
  const Real drift = zeroth_drift(res);
  line.require(drift <= 1e-8, "midpoint drift " + std::to_string(drift));

  // RK4 drift order across dt in {2e-3, 1e-3, 5e-4}. Explicit stepping needs
  // the CFL bound, so the order study runs the same scenario at n = 64.
  auto sc2 = builtin_scenarios()[0];
  sc2.n = 64;
  auto g2 = scenario_grid(sc2);
  auto drift_at = [&](Real dt) {
    auto c = run_config(sc2);
    c.scheme = Scheme::RK4;
    c.dt = dt;
    c.T = 0.1;
    c.record_every = 25;
    auto r = simulate(c, initial_state(sc2, g2));
    return zeroth_drift(r);
  };
  const Real d1 = drift_at(2e-3), d2 = drift_at(1e-3), d3 = drift_at(5e-4);
  const Real o1 = std::log2(d1 / d2), o2 = std::log2(d2 / d3);
  line.require(o1 >= 3.5 && o2 >= 3.5,
               "rk4 orders " + std::to_string(o1) + ", " + std::to_string(o2));
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "midpoint drift %.2e; rk4 drifts %.2e/%.2e/%.2e orders %.2f, %.2f",
                drift, d1, d2, d3, o1, o2);
  line.detail = buf;
}

TEST_CASE("criterion 3: certified evolution window") {
  Line line{3};
  std::string detail;
  for (const auto& base : builtin_scenarios()) {
    Real tstar[2] = {0, 0};
    int slot = 0;
    for (Index n : {128, 256}) {
      Scenario sc = base;
      sc.n = n;
      auto g = scenario_grid(sc);
      auto cfg = run_config(sc);
      cfg.record_every = 5;
      auto res = simulate(cfg, initial_state(sc, g));
      line.require(res.certified_T > 0.0, base.name + ": T* not positive");
      for (const auto& r : res.records) {
        line.require(r.energy.full <= 2.0 * res.E0 * (1.0 + 1e-12),
                     base.name + ": energy bound violated inside certified window");
        line.require(r.energy.phi_over_xi_min >= 1.0 / (2.0 * res.C0) &&
                         r.energy.phi_over_xi_max <= 2.0 * res.C0,
                     base.name + ": envelope violated inside certified window");
      }
      tstar[slot++] = res.certified_T;
    }
    line.require(std::abs(tstar[0] - tstar[1]) <= 0.2 * tstar[1],
                 base.name + ": T* unstable between n=128 and n=256");
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s T*=%.3f/%.3f ", base.name.c_str(),
                  tstar[0], tstar[1]);
    detail += buf;
  }
  line.detail = detail;
}

TEST_CASE("criterion 4: hardy and embedding suite") {
  Line line{4};
  auto hf = hardy_f_study(1.0, 128, 100, kSeed + 1);
  auto hg = hardy_g_study(1.0, 128, 100, kSeed + 2);
  auto se = sobolev_study(1.0, 128, 100, kSeed + 3);
  line.require(std::isfinite(hf.max_coarse) && hf.relative_change < 0.10,
               "hardy-f change " + std::to_string(hf.relative_change));
  line.require(std::isfinite(hg.max_coarse) && hg.relative_change < 0.10,
               "hardy-g change " + std::to_string(hg.relative_change));
  line.require(std::isfinite(se.max_coarse) && se.relative_change < 0.10,
               "embedding change " + std::to_string(se.relative_change));
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "ratios f %.3f (d %.1e), g %.3f (d %.1e), emb %.3f (d %.1e)",
                hf.max_coarse, hf.relative_change, hg.max_coarse,
                hg.relative_change, se.max_coarse, se.relative_change);
  line.detail = buf;
}

TEST_CASE("criterion 5: product-rule and commutator identities") {
  Line line{5};
  auto r = identity_study(1.0, 128, kSeed + 4);
  line.require(r.refinement_ratio >= 3.5 && r.refinement_ratio <= 4.5,
               "residual ratio " + std::to_string(r.refinement_ratio));
  line.require(r.exact_route_residual <= 1e-11,
               "exact-route residual " + std::to_string(r.exact_route_residual));
  char buf[128];
  std::snprintf(buf, sizeof(buf), "O(h^2) ratio %.2f, exact-route residual %.1e",
                r.refinement_ratio, r.exact_route_residual);
  line.detail = buf;
}

TEST_CASE("criterion 6: T_i representation") {
  Line line{6};
  auto at = [&](Index n) {
    auto sc = builtin_scenarios()[0];
    sc.n = n;
    auto g = std::make_unique<Grid>(scenario_grid(sc));
    auto cfg = run_config(sc);
    cfg.T = 0.025;  // mid-run state of the certified window
    cfg.record_every = 5;
    auto res = simulate(cfg, initial_state(sc, *g));
    auto st = res.states.back();
    auto ops = stack_of(st, cfg.params);
    auto rep = ti_diagnostics(ops, st, 4);
    return std::make_pair(rep, std::move(g));
  };
  auto [r1, g1] = at(128);
  auto [r2, g2] = at(256);
  const Real worst1 = std::max(r1.residual_i2, r1.residual_i3);
  const Real worst2 = std::max(r2.residual_i2, r2.residual_i3);
  const Real ratio = worst1 / worst2;
  line.require(ratio >= 3.0 && ratio <= 5.5,
               "identity residual ratio " + std::to_string(ratio));
  REQUIRE(r1.weighted_Ti.size() == 3);
  std::string tw;
  for (std::size_t i = 0; i < 3; ++i) {
    line.require(std::isfinite(r2.weighted_Ti[i]), "weighted T_i not finite");
    const Real change = std::abs(r2.weighted_Ti[i] - r1.weighted_Ti[i]) /
                        (r1.weighted_Ti[i] + 1e-300);
    line.require(change < 0.10, "weighted T_" + std::to_string(i + 2) +
                                    " change " + std::to_string(change));
    tw += (i ? "/" : "") + std::to_string(r2.weighted_Ti[i]);
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "residual ratio %.2f, weighted T_i %s",
                ratio, tw.c_str());
  line.detail = buf;
}

TEST_CASE("criterion 7: picard scheme") {
  Line line{7};
  auto sc = builtin_scenarios()[0];
  sc.n = 128;
  auto g = scenario_grid(sc);
  auto st0 = initial_state(sc, g);

  // preliminary direct run fixes the horizon: T = T*/2
  auto rc = run_config(sc);
  rc.record_every = 5;
  auto pre = simulate(rc, st0);
  line.require(pre.certified_T > 0.0, "preliminary run certified nothing");
  const Real T = 0.5 * pre.certified_T;

  PicardConfig pc;
  pc.params = sc.params();
  pc.dt = 1e-3;
  pc.T = T;
  pc.n_max = 10;
  pc.tol = 0.0;
  auto res = picard_iterate(pc, g, st0);

  int streak = 0, best = 0;
  Real prev = 0.0;
  for (const auto& r : res.trace) {
    if (prev > 0.0 && r.diff_prev <= 0.5 * prev)
      best = std::max(best, ++streak);
    else
      streak = 0;
    prev = r.diff_prev;
  }
  line.require(best >= 4, "only " + std::to_string(best) + " consecutive halvings");

  // reconstructed identities at the final time
  const auto i = res.last.times.size() - 1;
  auto opsf = make_stack(g, pc.params.k, res.last.prof[i]);
  State stf;
  stf.phi_over_xi = Field(g, res.last.prof[i]);
  stf.u = Field(g, res.last.u[i], 1.0);
  stf.dphi_dt = Field(g, res.last.dphi[i], 1.0);
  Field zero(g, 0.0);
  Field rD(g, (apply_V(opsf, xi_k_phi(stf, pc.params.k)).values - res.last.D[i]).eval(), 0.0);
  Field rH(g, (apply_Vstar(opsf, xi_k_u(stf, pc.params.k)).values - res.last.H[i]).eval(), 0.0);
  const Real idD = residual_of("D", rD, zero).l2;
  const Real idH = residual_of("H", rH, zero).l2;
  line.require(idD <= 5e-3, "D identity residual " + std::to_string(idD));
  line.require(idH <= 5e-3, "H identity residual " + std::to_string(idH));

  // picard limit against the direct solution
  auto rc2 = run_config(sc);
  rc2.T = T;
  rc2.dt = pc.dt;
  rc2.record_every = 1000000;
  auto direct = simulate(rc2, st0);
  auto& a = res.final_state;
  auto& b = direct.states.back();
  auto sa = make_stack(g, pc.params.k, a.phi_over_xi.values);
  auto sb = make_stack(g, pc.params.k, b.phi_over_xi.values);
  const Real d = diff_functional(sa, sb, a, b).d_value;
  const Real h = 1.0 / Real(sc.n);
  const Real bound = 5.0 * (h * h + pc.dt * pc.dt) * direct.E0;
  line.require(d <= bound, "picard-vs-direct D " + std::to_string(d) +
                               " exceeds " + std::to_string(bound));
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "T=%.4f, %d halvings, identities %.1e/%.1e, D(picard,direct) "
                "%.2e <= %.2e",
                T, best, idD, idH, d, bound);
  line.detail = buf;
}

TEST_CASE("criterion 8: norm equivalence") {
  Line line{8};
  auto e = equivalence_study(1.0, 128, 100, kSeed + 5);
  line.require(e.relative_change < 0.10,
               "M change " + std::to_string(e.relative_change));
  line.require(e.homogeneous_identity <= 1e-12,
               "phi=xi ratio deviates " + std::to_string(e.homogeneous_identity));
  char buf[128];
  std::snprintf(buf, sizeof(buf), "M = %.3f (change %.1e), phi=xi |ratio-1| = %.1e",
                e.M_coarse, e.relative_change, e.homogeneous_identity);
  line.detail = buf;
}

TEST_CASE("criterion 9: linear-solver stability") {
  Line line{9};
  auto measure = [](Index n) {
    auto g = std::make_unique<Grid>(make_grid(n, 1.0));
    const Grid& gr = *g;
    SkewPairProblem prob;
    prob.alpha = -1.0;
    prob.beta = -1.0;
    prob.dt = 1e-3;
    prob.T = 0.05;
    prob.stack_at = [&gr](Real) {
      VectorR prof(gr.n);
      for (Index j = 0; j < gr.n; ++j)
        prof[j] = 1.0 + 0.2 * std::sin(2.0 * gr.nodes[j]) *
                            poly_cutoff((gr.nodes[j] - 0.6) / 0.4);
      return make_stack(gr, 1.0, prof);
    };
    prob.j1 = [&gr](Real t) -> VectorR {
      return VectorR(std::cos(2.0 * t) *
                     (gr.nodes.array().square() * (1.0 - gr.nodes.array())));
    };
    prob.j2 = [&gr](Real t) -> VectorR {
      return VectorR(std::sin(1.0 + t) * gr.nodes.array() *
                     (1.0 - gr.nodes.array()).square());
    };
    VectorR z = VectorR::Zero(gr.n);
    auto sol = solve_skew_pair(prob, z, z);
    // zero-source sanity on the same background
    auto probz = prob;
    probz.j1 = nullptr;
    probz.j2 = nullptr;
    auto solz = solve_skew_pair(probz, z, z);
    Real zmax = 0.0;
    for (auto& v : solz.G) zmax = std::max(zmax, v.lpNorm<Eigen::Infinity>());
    for (auto& v : solz.F) zmax = std::max(zmax, v.lpNorm<Eigen::Infinity>());
    return std::make_pair(stability_constant(gr, prob, sol), zmax);
  };
  auto [c1, z1] = measure(64);
  auto [c2, z2] = measure(128);
  auto [c3, z3] = measure(256);
  line.require(std::max({z1, z2, z3}) <= 1e-14,
               "zero data did not stay zero: " + std::to_string(std::max({z1, z2, z3})));
  line.require(std::isfinite(c3) && std::abs(c2 - c3) / c3 < 0.10 &&
                   std::abs(c1 - c3) / c3 < 0.15,
               "C not refinement-stable");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "measured C = %.4f / %.4f / %.4f (n 64/128/256)",
                c1, c2, c3);
  line.detail = buf;
}

TEST_CASE("criterion 10: boundary tracking") {
  Line line{10};
  auto run_at = [](Index n) {
    auto sc = builtin_scenarios()[0];
    sc.n = n;
    auto g = std::make_unique<Grid>(scenario_grid(sc));
    auto cfg = run_config(sc);
    cfg.record_every = 2;
    auto res = simulate(cfg, initial_state(sc, *g));
    return std::make_pair(std::move(res), std::move(g));
  };
  auto [res, g] = run_at(128);
  Real max_u0 = 0.0;
  for (Real v : res.boundary.u_at_0) max_u0 = std::max(max_u0, std::abs(v));
  for (std::size_t i = 0; i < res.boundary.times.size(); ++i) {
    const Real bound = max_u0 * res.boundary.times[i] * (1.0 + 1e-3) + 1e-15;
    line.require(std::abs(res.boundary.a_of_t[i]) <= bound,
                 "interface displacement exceeds the integral bound");
  }
  auto route_gap = [](const SimulationResult& r) {
    Real gap = 0.0;
    for (std::size_t i = 0; i < r.boundary.times.size(); ++i)
      gap = std::max(gap, std::abs(r.boundary.u_at_0[i] - r.boundary.u_at_0_alt[i]));
    return gap;
  };
  auto [res64, g64] = run_at(64);
  const Real gap64 = route_gap(res64), gap128 = route_gap(res);
  const Real ratio = gap64 / gap128;
  line.require(ratio >= 2.5 && ratio <= 6.0,
               "extrapolation-route gap ratio " + std::to_string(ratio));
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max |a(t)-a(0)| = %.2e within bound, route gap ratio %.2f",
                std::abs(res.boundary.a_of_t.back()), ratio);
  line.detail = buf;
}
