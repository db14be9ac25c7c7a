#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pmel/nonlinearity.hpp"
#include "pmel/quadrature.hpp"

using namespace pmel;

TEST_CASE("canonical power law: closed forms at m = 2") {
  const Nonlinearity nl = Nonlinearity::canonical(2.0, 2.0);
  REQUIRE(nl.A(3.0) == Catch::Approx(9.0).epsilon(1e-14));
  REQUIRE(nl.A(-3.0) == Catch::Approx(-9.0).epsilon(1e-14));
  REQUIRE(nl.A_prime(3.0) == Catch::Approx(6.0).epsilon(1e-14));
  REQUIRE(nl.a(3.0) == Catch::Approx(std::sqrt(6.0)).epsilon(1e-14));
  REQUIRE(nl.a(-3.0) == nl.a(3.0));
  // Psi(r) = (2 sqrt(2) / 3) |r|^(1/2) r.
  REQUIRE(nl.Psi(4.0) == Catch::Approx(16.0 * std::sqrt(2.0) / 3.0).epsilon(1e-14));
  REQUIRE(nl.Psi(-4.0) == Catch::Approx(-nl.Psi(4.0)).epsilon(1e-14));
}

TEST_CASE("canonical Psi agrees with quadrature of a") {
  for (double m : {1.5, 2.0, 3.0, 4.5}) {
    const Nonlinearity nl = Nonlinearity::canonical(m, 2.0);
    for (double r : {0.25, 1.0, 2.5, -1.7}) {
      const double by_quad = integrate([&](double s) { return nl.a(s); }, 0.0, r, 1e-11,
                                       "Psi oracle");
      REQUIRE(nl.Psi(r) == Catch::Approx(by_quad).margin(1e-9));
    }
  }
}

TEST_CASE("canonical a_prime matches finite differences away from zero") {
  for (double m : {1.5, 2.0, 3.0, 5.0}) {
    const Nonlinearity nl = Nonlinearity::canonical(m, 2.0);
    for (double r : {0.5, 1.0, -2.0, 3.5}) {
      const double d = 1e-6 * std::abs(r);
      const double fd = (nl.a(r + d) - nl.a(r - d)) / (2.0 * d);
      REQUIRE(nl.a_prime(r) == Catch::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("Psi_f with unit weight reproduces Psi") {
  const Nonlinearity nl = Nonlinearity::canonical(3.0, 2.0);
  const double r = 1.8;
  REQUIRE(nl.Psi_f([](double) { return 1.0; }, r) == Catch::Approx(nl.Psi(r)).margin(1e-8));
  // Linear weight against the m = 3 closed form:
  // integral_0^r s * sqrt(3) s ds = sqrt(3) r^3 / 3.
  REQUIRE(nl.Psi_f([](double s) { return s; }, r) ==
          Catch::Approx(std::sqrt(3.0) * r * r * r / 3.0).margin(1e-8));
}

TEST_CASE("custom nonlinearity tracks the canonical one it samples") {
  const Nonlinearity ref = Nonlinearity::canonical(2.0, 2.0);
  const int n = 401;
  std::vector<double> r(n), A(n);
  for (int i = 0; i < n; ++i) {
    r[i] = -4.0 + 8.0 * i / (n - 1.0);
    A[i] = ref.A(r[i]);
  }
  const Nonlinearity nl = Nonlinearity::custom(2.0, 2.0, r, A);
  REQUIRE_FALSE(nl.is_canonical());
  for (double x : {-3.1, -0.9, 0.4, 1.3, 3.7}) {
    REQUIRE(nl.A(x) == Catch::Approx(ref.A(x)).margin(2e-3));
    REQUIRE(nl.a(x) == Catch::Approx(ref.a(x)).margin(2e-2));
    REQUIRE(nl.Psi(x) == Catch::Approx(ref.Psi(x)).margin(2e-2));
  }
  // Oddness of A and Psi, evenness of a, survive interpolation.
  for (double x : {0.3, 1.1, 2.6}) {
    REQUIRE(nl.A(-x) == Catch::Approx(-nl.A(x)).margin(1e-12));
    REQUIRE(nl.Psi(-x) == Catch::Approx(-nl.Psi(x)).margin(1e-10));
    REQUIRE(nl.a(-x) == Catch::Approx(nl.a(x)).margin(1e-12));
  }
  // Psi(0) = 0 and Psi increasing.
  REQUIRE(std::abs(nl.Psi(0.0)) < 1e-10);
  REQUIRE(nl.Psi(2.0) > nl.Psi(1.0));
}

TEST_CASE("custom extends linearly beyond the sampled range") {
  const Nonlinearity ref = Nonlinearity::canonical(2.0, 2.0);
  const int n = 201;
  std::vector<double> r(n), A(n);
  for (int i = 0; i < n; ++i) {
    r[i] = -2.0 + 4.0 * i / (n - 1.0);
    A[i] = ref.A(r[i]);
  }
  const Nonlinearity nl = Nonlinearity::custom(2.0, 2.0, r, A);
  const double slope = (nl.A(2.0) - nl.A(1.99)) / 0.01;
  REQUIRE(nl.A(3.0) == Catch::Approx(nl.A(2.0) + slope).epsilon(0.05));
  REQUIRE(nl.a(5.0) == nl.a(2.0));
}

TEST_CASE("constructor preconditions are invalid_argument, not solver errors") {
  REQUIRE_THROWS_AS(Nonlinearity::canonical(1.0, 2.0), std::invalid_argument);
  REQUIRE_THROWS_AS(Nonlinearity::canonical(0.5, 2.0), std::invalid_argument);
  REQUIRE_THROWS_AS(Nonlinearity::canonical(2.0, 0.5), std::invalid_argument);
  const std::vector<double> r = {-2.0, -1.0, 0.0, 1.0, 2.0};
  REQUIRE_THROWS_AS(Nonlinearity::custom(2.0, 2.0, {-2, -1, 0, 1}, {-4, -1, 0, 1}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(Nonlinearity::custom(2.0, 2.0, r, {-4.0, -1.0, 0.5, 1.0, 4.0}),
                    std::invalid_argument);  // not odd
  REQUIRE_THROWS_AS(Nonlinearity::custom(2.0, 2.0, r, {-4.0, -1.0, 0.0, -0.5, 4.0}),
                    std::invalid_argument);  // not odd, not increasing
  REQUIRE_THROWS_AS(Nonlinearity::custom(2.0, 2.0, {-2.0, -1.0, 0.0, 1.0, 3.0},
                                         {-4.0, -1.0, 0.0, 1.0, 4.0}),
                    std::invalid_argument);  // grid not symmetric
}
