#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "deltadimer/quadrature.hpp"

using namespace dimer;
using cplx = std::complex<double>;

namespace {

std::vector<cplx> sample(const MomentumGrid& g, auto&& f) {
  std::vector<cplx> v(g.n);
  for (std::size_t i = 0; i < g.n; ++i) v[i] = f(g.nodes[i]);
  return v;
}

}  // namespace

TEST_CASE("gauss_legendre_01 integrates polynomials at design order") {
  std::vector<double> x, w;
  gauss_legendre_01(12, x, w);
  REQUIRE(x.size() == 12);
  double wsum = 0, p23 = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    wsum += w[i];
    p23 += w[i] * std::pow(x[i], 23);  // exact for degree <= 2n-1
  }
  CHECK(std::abs(wsum - 1.0) < 1e-14);
  CHECK(std::abs(p23 - 1.0 / 24.0) < 5e-15);
}

TEST_CASE("build_grid produces an increasing positive half-line rule") {
  const auto g = build_grid(200, 1.0);
  REQUIRE(g.n == 200);
  CHECK(!g.onshell_index.has_value());
  CHECK(g.nodes.front() > 0);
  for (std::size_t i = 1; i < g.n; ++i) {
    CHECK(g.nodes[i] > g.nodes[i - 1]);
    CHECK(g.weights[i] > 0);
  }
  // Smoke integral: int_0^inf e^{-s} ds = 1.
  double acc = 0;
  for (std::size_t i = 0; i < g.n; ++i) acc += g.weights[i] * std::exp(-g.nodes[i]);
  CHECK(std::abs(acc - 1.0) < 1e-10);

  // The map scale stretches the rule without losing the integral.
  const auto g3 = build_grid(200, 3.0);
  double acc3 = 0;
  for (std::size_t i = 0; i < g3.n; ++i)
    acc3 += g3.weights[i] * std::exp(-g3.nodes[i]);
  CHECK(std::abs(acc3 - 1.0) < 1e-10);
}

TEST_CASE("build_grid injects the on-shell node bitwise") {
  const double P = 0.1;
  const auto g = build_grid(200, 1.0, P);
  REQUIRE(g.onshell_index.has_value());
  CHECK(g.n == 201);
  CHECK(g.nodes[*g.onshell_index] == P);      // exact, not approximated
  CHECK(g.weights[*g.onshell_index] == 0.0);  // couples only via PV terms
  for (std::size_t i = 1; i < g.n; ++i) CHECK(g.nodes[i] > g.nodes[i - 1]);
}

TEST_CASE("build_grid rejects degenerate inputs") {
  CHECK_NOTHROW(build_grid(16, 1.0));
  CHECK_THROWS_AS(build_grid(8, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(200, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(200, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(200, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(200, 1.0, -0.5), std::invalid_argument);
}

TEST_CASE("pv_integrate of a constant is the pure residue term") {
  // PV int_0^inf ds/(s^2-P^2) = 0, so G == 1 leaves only i*pi/(2P).
  const double P = 0.7;
  const auto g = build_grid(200, 1.0, P);
  const auto G = sample(g, [](double) { return cplx(1.0, 0.0); });
  const cplx r = pv_integrate(g, G, P);
  CHECK(std::abs(r.real()) < 1e-13);
  CHECK(std::abs(r.imag() - std::numbers::pi / (2 * P)) < 1e-12);
}

TEST_CASE("pv_integrate with the pole factored out reduces to a plain integral") {
  const double P = 0.6;
  const auto g = build_grid(200, 1.0, P);
  // (s - P)(s + P) rather than s^2 - P^2: the factored form is exactly zero
  // at the injected node even when the compiler contracts multiply-adds.
  const auto G = sample(g, [&](double s) {
    return cplx((s - P) * (s + P) * std::exp(-s), 0.0);
  });
  const cplx r = pv_integrate(g, G, P);
  CHECK(std::abs(r.real() - 1.0) < 1e-8);
  CHECK(r.imag() == 0.0);  // G(P) = 0 kills the residue term exactly
}

TEST_CASE("pv_integrate is purely principal-value when G vanishes on shell") {
  const double P = 1.3;
  const auto g = build_grid(200, 1.0, P);
  const auto G = sample(g, [&](double s) {
    return cplx(std::sin(s - P) * std::exp(-0.5 * s), 0.0);
  });
  CHECK(pv_integrate(g, G, P).imag() == 0.0);
}

TEST_CASE("pv_integrate converges under node doubling") {
  const double P = 0.9;
  const auto f = [&](double s) {
    return cplx(std::exp(-s), std::exp(-1.5 * s) * s);
  };
  const auto g1 = build_grid(200, 1.0, P);
  const auto g2 = build_grid(400, 1.0, P);
  const cplx r1 = pv_integrate(g1, sample(g1, f), P);
  const cplx r2 = pv_integrate(g2, sample(g2, f), P);
  CHECK(std::abs(r1 - r2) < 1e-8 * std::abs(r2));
}

TEST_CASE("pv_integrate is linear in the integrand") {
  const double P = 0.4;
  const auto g = build_grid(150, 1.0, P);
  const auto f1 = [](double s) { return cplx(std::exp(-s), std::cos(s) * std::exp(-2 * s)); };
  const auto f2 = [](double s) { return cplx(1.0 / (1 + s * s), std::exp(-0.3 * s)); };
  const auto G1 = sample(g, f1);
  const auto G2 = sample(g, f2);

  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const cplx alpha(u(rng), u(rng)), beta(u(rng), u(rng));
    std::vector<cplx> mix(g.n);
    for (std::size_t i = 0; i < g.n; ++i) mix[i] = alpha * G1[i] + beta * G2[i];
    const cplx lhs = pv_integrate(g, mix, P);
    const cplx rhs = alpha * pv_integrate(g, G1, P) + beta * pv_integrate(g, G2, P);
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("pv_integrate rejects grids without the pole node") {
  const double P = 0.5;
  const auto plain = build_grid(64, 1.0);
  std::vector<cplx> G(plain.n, cplx(1, 0));
  CHECK_THROWS_AS(pv_integrate(plain, G, P), std::invalid_argument);

  const auto g = build_grid(64, 1.0, P);
  std::vector<cplx> wrong(g.n - 1, cplx(1, 0));
  CHECK_THROWS_AS(pv_integrate(g, wrong, P), std::invalid_argument);
  // The injected node must match the requested P.
  std::vector<cplx> ok(g.n, cplx(1, 0));
  CHECK_THROWS_AS(pv_integrate(g, ok, 0.51), std::invalid_argument);
}
