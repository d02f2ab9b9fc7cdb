#include <doctest.h>

#include "pvac/params.hpp"

using namespace pvac;

TEST_CASE("k_of_gamma closed-form values") {
  CHECK(k_of_gamma(3.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k_of_gamma(5.0 / 3.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(k_of_gamma(1.1) == doctest::Approx(10.5).epsilon(1e-12));
  CHECK_THROWS_AS(k_of_gamma(1.0), ConfigError);
  CHECK_THROWS_AS(k_of_gamma(0.5), ConfigError);
}

TEST_CASE("k_of_gamma strictly decreasing, k > 1/2") {
  double prev = k_of_gamma(1.0 + 1e-6);
  for (double g = 1.1; g < 50.0; g *= 1.3) {
    double k = k_of_gamma(g);
    CHECK(k < prev);
    CHECK(k > 0.5);
    prev = k;
  }
}

TEST_CASE("energy order s = ceil(k) + 3") {
  CHECK(Params::make(3.0).s == 4);
  CHECK(Params::make(5.0 / 3.0).s == 5);
  CHECK(Params::make(2.0).s == 5);   // k = 3/2
  CHECK(Params::make(4.0).s == 4);   // k = 5/6
}

TEST_CASE("phi_of_rho: gamma=3, A=1/3 collapses to identity") {
  auto p = Params::make(3.0, 1.0 / 3.0, 1.0 / 3.0);
  CHECK(phi_of_rho(0.0, p) == 0.0);
  for (double r : {1e-6, 1e-3, 0.37, 1.0})
    CHECK(phi_of_rho(r, p) == doctest::Approx(r).epsilon(1e-14));
  CHECK_THROWS_AS(phi_of_rho(-1.0, p), AdmissibilityError);
}

TEST_CASE("rho_of_phi inverts phi_of_rho to 1e-12 relative") {
  auto p = Params::make(1.4, 0.8, 2.0);
  for (double r : {1e-6, 1e-4, 1e-2, 0.5, 1.0}) {
    double back = rho_of_phi(phi_of_rho(r, p), p);
    CHECK(back == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("xi_of_y endpoints and gamma=3 quarter-mass value") {
  auto p = Params::make(3.0);
  CHECK(xi_of_y(0.0, p) == 0.0);
  CHECK(xi_of_y(p.total_mass, p) == doctest::Approx(1.0).epsilon(1e-14));
  // exponent (gamma-1)/2gamma = 1/3
  CHECK(xi_of_y(p.total_mass / 4.0, p) ==
        doctest::Approx(std::pow(0.25, 1.0 / 3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(xi_of_y(-0.1, p), AdmissibilityError);
  CHECK_THROWS_AS(xi_of_y(2.0 * p.total_mass, p), AdmissibilityError);
}

TEST_CASE("xi_of_y / y_of_xi round trip to 1e-12") {
  for (double gamma : {1.4, 2.0, 3.0, 4.0}) {
    auto p = Params::make(gamma, 0.7, 1.3);
    for (double xi = 0.05; xi <= 1.0; xi += 0.05) {
      CHECK(xi_of_y(y_of_xi(xi, p), p) == doctest::Approx(xi).epsilon(1e-12));
    }
    // numeric inversion cross-check of the quarter-mass example
    if (gamma == 3.0) {
      double target = p.total_mass / 4.0;
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (y_of_xi(mid, p) < target ? lo : hi) = mid;
      }
      CHECK(0.5 * (lo + hi) == doctest::Approx(xi_of_y(target, p)).epsilon(1e-10));
    }
  }
}

TEST_CASE("unit normalization: default A and M give kappa = lambda = 1") {
  for (double gamma : {1.4, 5.0 / 3.0, 2.0, 3.0, 4.0}) {
    auto p = Params::make(gamma);
    CHECK(p.kappa == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(p.lambda == doctest::Approx(1.0).epsilon(1e-13));
  }
  CHECK(Params::make(3.0).entropy_const == doctest::Approx(1.0 / 3.0));
}
