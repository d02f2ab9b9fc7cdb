#include <doctest.h>

#include "pvac/norms.hpp"

using namespace pvac;

namespace {

State make_state(const Grid& g, std::function<Real(Real)> prof,
                 std::function<Real(Real)> vel) {
  State st;
  st.phi_over_xi = Field::sample(g, prof, 0.0);
  st.u = Field::sample(g, vel, 1.0);
  st.dphi_dt = Field(g, 1.0);
  return st;
}

}  // namespace

TEST_CASE("space_norm: s=0 is the plain L2 norm; s=1 unrolls") {
  auto g = make_grid(128, 2.0);
  auto st = homogeneous_stack(g, 1.0);
  auto f = Field::sample(g, [](Real x) { return x * x * (1 - x); }, 2.0);
  CHECK(space_norm(st, Chain::X, 0, f) == doctest::Approx(norm_l2(f)).epsilon(1e-14));
  Real n0 = norm_l2(f), n1 = norm_l2(apply_V(st, f));
  CHECK(space_norm(st, Chain::X, 1, f) ==
        doctest::Approx(std::sqrt(n0 * n0 + n1 * n1)).epsilon(1e-14));
  CHECK_THROWS_AS(space_norm(st, Chain::X, 100, f), OrderError);
}

TEST_CASE("hand integral: ||xi^2||^2 in Xbar^{1,1} is 1/5 + 3 = 3.2") {
  auto g = make_grid(512, 1.0);
  auto st = homogeneous_stack(g, 1.0);
  auto f = Field::sample(g, [](Real x) { return x * x; }, 2.0);
  Real n = space_norm(st, Chain::X, 1, f);
  CHECK(n * n == doctest::Approx(3.2).epsilon(2e-3));
}

TEST_CASE("norms are absolutely homogeneous") {
  auto g = make_grid(96, 2.0);
  auto st = homogeneous_stack(g, 1.5);
  auto f = Field::sample(g, [](Real x) { return x * x * (1 - x) * (1 - x); }, 2.0);
  Real base = space_norm(st, Chain::Y, 3, f);
  Field scaled = f;
  scaled.values *= -7.25;
  CHECK(space_norm(st, Chain::Y, 3, scaled) ==
        doctest::Approx(7.25 * base).epsilon(1e-13));
}

TEST_CASE("zeroth energy: phi=xi, u=0, k=1 gives (1/3) int xi^4 = 1/15") {
  auto g = make_grid(256, 1.0);
  auto p = Params::make(3.0);
  auto st = make_state(g, [](Real) { return 1.0; }, [](Real) { return 0.0; });
  auto ops = stack_of(st, p);
  CHECK(zeroth_energy(ops, st) == doctest::Approx(1.0 / 15.0).epsilon(5e-4));
}

TEST_CASE("zeroth energy: doubling u quadruples the velocity part exactly") {
  auto g = make_grid(64, 2.0);
  auto p = Params::make(3.0);
  auto st = make_state(g, [](Real) { return 1.0; },
                       [](Real x) { return 0.3 * std::sin(x) * (1 - x); });
  auto ops = stack_of(st, p);
  Real phi_part = zeroth_energy(ops, make_state(g, [](Real) { return 1.0; },
                                                [](Real) { return 0.0; }));
  Real e1 = zeroth_energy(ops, st);
  State st2 = st;
  st2.u.values *= 2.0;
  Real e2 = zeroth_energy(ops, st2);
  CHECK(e2 - phi_part == doctest::Approx(4.0 * (e1 - phi_part)).epsilon(1e-13));
}

TEST_CASE("energy report: internal consistency and sign symmetry in u") {
  auto g = make_grid(128, 2.0);
  auto p = Params::make(3.0);
  auto st = make_state(
      g, [](Real x) { return 1.0 + 0.1 * (1 - x) * smooth_cutoff((x - 0.5) / 0.45); },
      [](Real x) { return 0.1 * std::sin(3.14159 * x) * smooth_cutoff((x - 0.5) / 0.45); });
  auto ops = stack_of(st, p);
  refresh_dphi_dt(st, ops);
  auto rep = energy(ops, st, p.s);

  // full equals the displayed sum of its parts
  Real c1 = 1.0 / (2.0 * p.k + 1.0);
  Real total = c1 * rep.phi_levels[0] + rep.u_levels[0];
  for (int i = 1; i <= p.s; ++i)
    total += c1 * c1 * rep.phi_levels[i] + rep.u_levels[i];
  CHECK(rep.full == doctest::Approx(total).epsilon(1e-14));
  CHECK(rep.full >= rep.zeroth);
  CHECK(rep.zeroth > 0.0);

  // (phi, u) and (phi, -u) give identical reports
  State neg = st;
  neg.u.values = -st.u.values;
  refresh_dphi_dt(neg, ops);
  auto rep2 = energy(ops, neg, p.s);
  CHECK(rep.full == doctest::Approx(rep2.full).epsilon(1e-14));
}

TEST_CASE("energy: all-zero state is inadmissible") {
  auto g = make_grid(64, 2.0);
  auto p = Params::make(3.0);
  State st;
  st.phi_over_xi = Field(g);
  st.u = Field(g, 1.0);
  st.dphi_dt = Field(g, 1.0);
  CHECK_THROWS_AS(stack_of(st, p), DegeneracyError);
}

TEST_CASE("approx energy: zero fields, level count, norm form") {
  auto g = make_grid(96, 2.0);
  const Real k = 1.0;  // ceil(k) = 1: exactly two levels
  auto ops = homogeneous_stack(g, k);
  Field z(g);
  CHECK(approx_energy(ops, z, z) == 0.0);

  auto G = Field::sample(g, [](Real x) { return x * (1 - x) * (1 - x); }, 1.0);
  auto F = Field::sample(g, [](Real x) { return x * x * (1 - x); }, 2.0);
  Real e = approx_energy(ops, G, F);
  Real c = 1.0 / 9.0;
  Real manual = c * norm_l2(G) * norm_l2(G) + norm_l2(F) * norm_l2(F);
  auto G1 = apply_Vstar(ops, G);
  auto F1 = apply_V(ops, F);
  manual += c * norm_l2(G1) * norm_l2(G1) + norm_l2(F1) * norm_l2(F1);
  CHECK(e == doctest::Approx(manual).epsilon(1e-13));

  // equals the stated space-norm combination
  Real y = space_norm(ops, Chain::Y, 1, G);
  Real x = space_norm(ops, Chain::X, 1, F);
  CHECK(e == doctest::Approx(c * y * y + x * x).epsilon(1e-13));
}

TEST_CASE("norm equivalence: phi=xi gives ratio 1 to roundoff; scale invariant") {
  auto g = make_grid(128, 2.0);
  const Real k = 1.0;
  auto hom = make_stack(g, k, VectorR(VectorR::Ones(g.n)));
  auto f = Field::sample(g, [](Real x) { return x * x * std::pow(1 - x, 3); }, 2.0);
  CHECK(norm_equivalence_ratio(hom, Chain::X, 1, f) ==
        doctest::Approx(1.0).epsilon(1e-12));

  VectorR prof(g.n);
  for (Index j = 0; j < g.n; ++j)
    prof[j] = 1.25 + 0.65 * std::sin(5.0 * g.nodes[j]);
  auto st = make_stack(g, k, prof);
  Real r = norm_equivalence_ratio(st, Chain::X, 1, f);
  CHECK(std::isfinite(r));
  CHECK(r > 0.0);
  Field cf = f;
  cf.values *= 11.0;
  CHECK(norm_equivalence_ratio(st, Chain::X, 1, cf) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("diff functional: zero on identical states, quadratic in perturbation") {
  auto g = make_grid(96, 2.0);
  auto p = Params::make(3.0);
  auto base = make_state(
      g, [](Real x) { return 1.0 + 0.05 * (1 - x) * (1 - x); },
      [](Real x) { return 0.1 * x * (1 - x) * (1 - x); });
  auto ops = stack_of(base, p);
  refresh_dphi_dt(base, ops);
  auto rep0 = diff_functional(ops, ops, base, base);
  CHECK(rep0.d_value == 0.0);

  auto perturbed = [&](Real delta) {
    State st = base;
    for (Index j = 0; j < g.n; ++j) {
      Real x = g.nodes[j];
      st.u.values[j] += delta * x * std::pow(1 - x, 3);
    }
    refresh_dphi_dt(st, ops);
    return diff_functional(ops, ops, base, st).d_value;
  };
  Real d1 = perturbed(1e-3), d2 = perturbed(2e-3);
  CHECK(d2 / d1 == doctest::Approx(4.0).epsilon(1e-6));
}
