#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "pmel/mollify.hpp"
#include "pmel/quadrature.hpp"

using namespace pmel;

namespace {

MollifiedCoefficients make(double m, int n, int cells = 64) {
  const Nonlinearity nl = Nonlinearity::canonical(m, 2.0);
  const NoiseFamily g({sinusoidal_in_x_mode(1.0, 1)}, 2.0);
  const PeriodicGrid grid(1, cells);
  const Field u0 = make_bump(grid, 1.0, {0.5, 0.0}, 0.25);
  return mollify(nl, g, u0, n);
}

}  // namespace

TEST_CASE("bump kernel weights are a partition of unity") {
  const detail::KernelNodes k = detail::bump_kernel_nodes(0.1, 32);
  double total = 0.0;
  for (double w : k.weight) {
    REQUIRE(w > 0.0);
    total += w;
  }
  REQUIRE(total == Catch::Approx(1.0).epsilon(1e-14));
  for (double off : k.offset) REQUIRE(std::abs(off) < 0.1);
}

TEST_CASE("smoothing scale passes its own modulus test") {
  const Nonlinearity nl = Nonlinearity::canonical(2.0, 2.0);
  for (int n : {2, 8}) {
    const double theta = detail::theta_search(nl, n);
    REQUIRE(theta > 0.0);
    REQUIRE(theta <= 1.0);
    REQUIRE(detail::modulus_ok(nl, n, theta));
    // Maximality up to the search tolerance.
    REQUIRE_FALSE(detail::modulus_ok(nl, n, theta * 1.01));
  }
  // Lipschitz a (m = 3): |a(r) - a(z)| = sqrt(3)|r - z|, so theta_2 is
  // about 1/(6 sqrt(3) * 2) up to sampling; check the right scale.
  const Nonlinearity lin = Nonlinearity::canonical(3.0, 2.0);
  const double theta = detail::theta_search(lin, 2);
  REQUIRE(theta * 3.0 * std::sqrt(3.0) <= 0.5 * 1.01);
  REQUIRE(theta * 3.0 * std::sqrt(3.0) >= 0.5 * 0.8);
}

TEST_CASE("mollified a dominates 2/n and stays within 4/n of a") {
  for (double m : {2.0, 3.0}) {
    for (int n : {4, 16}) {
      const Nonlinearity nl = Nonlinearity::canonical(m, 2.0);
      const MollifiedCoefficients mc = make(m, n);
      REQUIRE(mc.n() == n);
      double min_an = std::numeric_limits<double>::infinity();
      double sup_dev = 0.0;
      for (int i = 0; i <= 4000; ++i) {
        const double r = -n + 2.0 * n * i / 4000.0;
        const double an = mc.a_n(r);
        min_an = std::min(min_an, an);
        sup_dev = std::max(sup_dev, std::abs(an - nl.a(r)));
      }
      INFO("m=" << m << " n=" << n << " min=" << min_an << " dev=" << sup_dev);
      REQUIRE(min_an >= 2.0 / n);
      REQUIRE(sup_dev <= 4.0 / n);
    }
  }
}

TEST_CASE("mollified coefficients keep the expected symmetries") {
  const MollifiedCoefficients mc = make(2.0, 8);
  for (double r : {0.3, 1.0, 2.7, 7.5}) {
    REQUIRE(mc.a_n(-r) == Catch::Approx(mc.a_n(r)).margin(1e-14));
    REQUIRE(mc.A_n(-r) == Catch::Approx(-mc.A_n(r)).margin(1e-14));
    REQUIRE(mc.Psi_n(-r) == Catch::Approx(-mc.Psi_n(r)).margin(1e-14));
    REQUIRE(mc.A_n_prime(r) == Catch::Approx(mc.a_n(r) * mc.a_n(r)).margin(1e-15));
  }
  REQUIRE(mc.A_n(0.0) == 0.0);
  REQUIRE(mc.Psi_n(0.0) == 0.0);
}

TEST_CASE("tabulated integrals match direct quadrature of a_n") {
  const MollifiedCoefficients mc = make(2.0, 4);
  for (double r : {0.05, 0.7, 1.9, 3.0, 11.5, 13.0}) {
    const double A_ref = integrate([&](double s) { return mc.a_n(s) * mc.a_n(s); }, 0.0, r,
                                   1e-10, "A_n oracle");
    const double P_ref = integrate([&](double s) { return mc.a_n(s); }, 0.0, r, 1e-10,
                                   "Psi_n oracle");
    REQUIRE(mc.A_n(r) == Catch::Approx(A_ref).margin(5e-7));
    REQUIRE(mc.Psi_n(r) == Catch::Approx(P_ref).margin(5e-7));
  }
}

TEST_CASE("mollified A is strictly increasing") {
  const MollifiedCoefficients mc = make(2.0, 4);
  double prev = mc.A_n(-13.0);
  for (int i = 1; i <= 2000; ++i) {
    const double r = -13.0 + 26.0 * i / 2000.0;
    const double v = mc.A_n(r);
    REQUIRE(v > prev);
    prev = v;
  }
}

TEST_CASE("noise distance to the mollified family vanishes with n") {
  const Nonlinearity nl = Nonlinearity::canonical(2.0, 2.0);
  const NoiseFamily g({sinusoidal_in_x_mode(1.0, 1)}, 2.0);
  const PeriodicGrid grid(1, 64);
  const Field u0 = make_bump(grid, 1.0, {0.5, 0.0}, 0.25);
  SampleSpec spec;
  spec.nx = 16;
  spec.u_lo = -5.0;
  spec.u_hi = 5.0;
  spec.nu = 101;
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {4, 16, 64}) {
    const MollifiedCoefficients mc = mollify(nl, g, u0, n);
    const double d = noise_distance(mc.g_n(), g, nl.m(), spec);
    INFO("n=" << n << " d=" << d);
    REQUIRE(d < prev);
    prev = d;
  }
  REQUIRE(prev < 1e-2);
}

TEST_CASE("constant modes and constant states are fixed points of mollification") {
  const Nonlinearity nl = Nonlinearity::canonical(2.0, 2.0);
  const NoiseFamily g({constant_mode(1.5)}, 2.0);
  const PeriodicGrid grid(1, 32);
  const Field u0 = make_constant(grid, 0.75);
  const MollifiedCoefficients mc = mollify(nl, g, u0, 4);
  REQUIRE(mc.g_n().eval(0, {0.3, 0.0}, 0.2) == Catch::Approx(1.5).epsilon(1e-13));
  for (std::size_t i = 0; i < u0.size(); ++i) {
    REQUIRE(mc.u0_n()[i] == Catch::Approx(0.75).epsilon(1e-13));
  }
}

TEST_CASE("state mollification preserves mass and clamps to [-n, n]") {
  const Nonlinearity nl = Nonlinearity::canonical(2.0, 2.0);
  const NoiseFamily g({constant_mode(1.0)}, 2.0);
  const PeriodicGrid grid(1, 128);
  Field u0 = make_bump(grid, 6.0, {0.5, 0.0}, 0.2);
  const MollifiedCoefficients mc = mollify(nl, g, u0, 4);
  // Clamp to [-4, 4] cuts the peak before smoothing.
  double clamped_mass = 0.0;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    clamped_mass += std::min(u0[i], 4.0);
  }
  clamped_mass *= grid.cell_volume();
  REQUIRE(mc.u0_n().mass() == Catch::Approx(clamped_mass).epsilon(1e-12));
  REQUIRE(mc.u0_n().max_value() <= 4.0 + 1e-12);
}

TEST_CASE("mollify rejects nonpositive levels") {
  const Nonlinearity nl = Nonlinearity::canonical(2.0, 2.0);
  const NoiseFamily g({constant_mode(1.0)}, 2.0);
  const PeriodicGrid grid(1, 16);
  REQUIRE_THROWS_AS(mollify(nl, g, make_constant(grid, 1.0), 0), std::invalid_argument);
}
