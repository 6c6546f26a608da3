#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "deltadimer/bound.hpp"
#include "deltadimer/params.hpp"
#include "deltadimer/quadrature.hpp"

using namespace dimer;

namespace {

BoundOptions opts(std::size_t grid_n, std::size_t quad_n) {
  BoundOptions o;
  o.grid_n = grid_n;
  o.quad_n = quad_n;
  return o;
}

// Left-hand side of the dimer-channel equation rebuilt from (c, c1) with the
// grid's own rule, independent of the kernel assembly path:
//   c(p) = -t(E - p^2/(2M)) (1/2pi) int dk c1(k) [1/D_p(k) + 1/D_p(-k)]
double dimer_channel_rhs(double p, const Eigen::VectorXd& c1, double E,
                         const PhysicalParams& par, const MomentumGrid& grid) {
  const double inv2m1 = 0.5 / par.m1;
  const double inv2m2 = 0.5 / par.m2;
  double acc = 0;
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double k = grid.nodes[j];
    const double dp = (p - k) * (p - k) * inv2m1 + k * k * inv2m2 - E;
    const double dm = (p + k) * (p + k) * inv2m1 + k * k * inv2m2 - E;
    acc += grid.weights[j] * c1(static_cast<Eigen::Index>(j)) * (1.0 / dp + 1.0 / dm);
  }
  const double t = t_matrix(E - p * p / (2.0 * par.M), par.m, par.a);
  return -t * acc / (2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("bound_eigenvalue vanishes when the impurity is off") {
  const auto par = new_params(1, 1, 1, std::nullopt);
  const auto grid = build_grid(32, 1.0);
  CHECK(bound_eigenvalue(-2.0, Parity::even, par, grid, 100) == 0.0);
  CHECK(bound_eigenvalue(-5.0, Parity::odd, par, grid, 100) == 0.0);
}

TEST_CASE("bound_eigenvalue rejects repulsive impurities and shallow energies") {
  const auto grid = build_grid(32, 1.0);
  const auto rep = new_params(1, 1, 1, -1.0);
  CHECK_THROWS_AS(bound_eigenvalue(-2.0, Parity::even, rep, grid, 100),
                  std::domain_error);

  const auto att = new_params(1, 1, 1, 1.0);  // thresholds at -1 and -0.5
  CHECK_THROWS_AS(bound_eigenvalue(-0.9, Parity::even, att, grid, 100),
                  std::domain_error);
  CHECK_THROWS_AS(bound_eigenvalue(att.eps, Parity::even, att, grid, 100),
                  std::domain_error);
  CHECK_NOTHROW(bound_eigenvalue(-1.0001, Parity::even, att, grid, 100));
}

TEST_CASE("bound_eigenvalue decays toward deep energies") {
  const auto par = new_params(1, 1, 1, 1.0);
  const auto grid = build_grid(64, 1.0);
  const double l3 = bound_eigenvalue(-3.0, Parity::even, par, grid, 200);
  const double l50 = bound_eigenvalue(-50.0, Parity::even, par, grid, 200);
  const double l500 = bound_eigenvalue(-500.0, Parity::even, par, grid, 200);
  CHECK(l3 > l50);
  CHECK(l50 > l500);
  CHECK(l500 < 0.1);
  CHECK(l500 > 0.0);  // attractive channel keeps a positive top eigenvalue
}

TEST_CASE("bound_eigenvalue decreases strictly along the energy ladder") {
  const auto par = new_params(1, 1, 1, 1.0);
  const auto grid = build_grid(48, 1.0);
  const double E_hi = par.eps * (1.0 + 1e-9);
  const double ratio = (12.0 * par.eps) / E_hi;
  double prev = 0;
  for (int k = 0; k < 20; ++k) {
    const double E = E_hi * std::pow(ratio, k / 19.0);
    const double lam = bound_eigenvalue(E, Parity::even, par, grid, 100);
    if (k > 0) CHECK(lam < prev);
    prev = lam;
  }
}

TEST_CASE("even bound state below the dimer at unit impurity length") {
  const auto par = new_params(1, 1, 1, 1.0);
  const auto res = solve_bound_state(par, Parity::even, opts(200, 300));
  REQUIRE(res.has_value());
  CHECK(res->energy < par.eps);
  CHECK(res->energy > 10.0 * par.eps);
  CHECK(res->lambda_residual <= 1e-10);
  CHECK(res->parity == Parity::even);
  CHECK(res->grid.n == 200);
  CHECK(res->c.size() == 200);

  // Ground-state amplitude: positive peak of exactly one, nodeless, and
  // monotone beyond the peak.
  Eigen::Index peak = 0;
  const double cmax = res->c.maxCoeff(&peak);
  CHECK(cmax == 1.0);
  CHECK(res->c.minCoeff() > 0.0);
  for (Eigen::Index i = peak; i + 1 < res->c.size(); ++i)
    CHECK(res->c(i + 1) < res->c(i));
}

TEST_CASE("bound-state energy asymptotes in the impurity length") {
  SUBCASE("short impurity length parks the state at the capture threshold") {
    const auto par = new_params(1, 1, 1, 0.05);
    const auto res = solve_bound_state(par, Parity::even);
    REQUIRE(res.has_value());
    const double ratio = res->energy / par.eps;
    CHECK(ratio == doctest::Approx(200.0).epsilon(0.05));
    CHECK(res->energy < *par.eps1);
  }
  SUBCASE("long impurity length binds weakly below the dimer") {
    const auto par = new_params(1, 1, 1, 10.0);
    const auto res = solve_bound_state(par, Parity::even);
    REQUIRE(res.has_value());
    const double excess = res->energy / par.eps - 1.0;
    CHECK(excess == doctest::Approx(0.01).epsilon(0.10));
  }
}

TEST_CASE("odd channel hosts no bound state") {
  for (const double a1 : {0.1, 1.0, 10.0}) {
    const auto par = new_params(1, 1, 1, a1);
    const auto res = solve_bound_state(par, Parity::odd, opts(96, 160));
    CHECK_FALSE(res.has_value());
  }
}

TEST_CASE("bound state is absent with the impurity off") {
  const auto par = new_params(1, 1, 1, std::nullopt);
  CHECK_FALSE(solve_bound_state(par, Parity::even).has_value());
}

TEST_CASE("solve_bound_state validates its window and couplings") {
  const auto rep = new_params(1, 1, 1, -2.0);
  CHECK_THROWS_AS(solve_bound_state(rep, Parity::even), std::domain_error);

  const auto par = new_params(1, 1, 1, 1.0);
  BoundOptions above;
  above.E_hi = -0.9;  // above the dimer threshold
  CHECK_THROWS_AS(solve_bound_state(par, Parity::even, above), std::invalid_argument);
  BoundOptions empty;
  empty.E_lo = par.eps * (1.0 + 1e-9);
  empty.E_hi = par.eps * (1.0 + 1e-9);
  CHECK_THROWS_AS(solve_bound_state(par, Parity::even, empty), std::invalid_argument);

  // A floor above the actual state leaves lambda > 1 across the whole window.
  BoundOptions shallow = opts(64, 100);
  shallow.E_lo = -1.005;
  CHECK_THROWS_AS(solve_bound_state(par, Parity::even, shallow), std::runtime_error);
}

TEST_CASE("bound-state energy is converged in both discretizations") {
  const auto par = new_params(1, 1, 1, 1.0);
  const auto coarse = solve_bound_state(par, Parity::even, opts(200, 200));
  const auto fine = solve_bound_state(par, Parity::even, opts(400, 400));
  REQUIRE(coarse.has_value());
  REQUIRE(fine.has_value());
  CHECK(std::abs(coarse->energy - fine->energy) < 1e-7 * std::abs(fine->energy));
}

TEST_CASE("recover_c1 is zero with the impurity off") {
  const auto par = new_params(1, 1, 1, std::nullopt);
  const auto grid = build_grid(64, 1.0);
  Eigen::VectorXd c(64);
  for (std::size_t i = 0; i < grid.n; ++i)
    c(static_cast<Eigen::Index>(i)) = std::exp(-grid.nodes[i] * grid.nodes[i]);
  const Eigen::VectorXd c1 = recover_c1(c, -2.0, par, grid);
  CHECK(c1.isZero(0.0));
}

TEST_CASE("recovered amplitudes satisfy the dimer-channel equation") {
  const auto par = new_params(1, 1, 1, 1.0);
  const auto res = solve_bound_state(par, Parity::even, opts(200, 300));
  REQUIRE(res.has_value());
  const Eigen::VectorXd c1 = recover_c1(res->c, res->energy, par, res->grid);

  CHECK(c1.minCoeff() > 0.0);  // both channel amplitudes are nodeless
  CHECK(c1(c1.size() - 1) < 1e-6 * c1.maxCoeff());

  double worst = 0;
  for (std::size_t i = 0; i < res->grid.n; ++i) {
    const double rhs = dimer_channel_rhs(res->grid.nodes[i], c1, res->energy, par, res->grid);
    worst = std::max(worst, std::abs(res->c(static_cast<Eigen::Index>(i)) - rhs));
  }
  CHECK(worst <= 1e-8);  // peak of c is normalized to 1
}

TEST_CASE("recover_c1 validates its inputs") {
  const auto par = new_params(1, 1, 1, 1.0);
  const auto grid = build_grid(32, 1.0);
  CHECK_THROWS_AS(recover_c1(Eigen::VectorXd::Zero(31), -2.0, par, grid),
                  std::invalid_argument);
  CHECK_THROWS_AS(recover_c1(Eigen::VectorXd::Zero(32), -0.9, par, grid),
                  std::domain_error);
}

TEST_CASE("interp_even reproduces samples and the even extension") {
  const auto grid = build_grid(96, 1.0);
  Eigen::VectorXd f(96);
  for (std::size_t i = 0; i < grid.n; ++i)
    f(static_cast<Eigen::Index>(i)) = std::exp(-grid.nodes[i] * grid.nodes[i]);

  for (const std::size_t i : {0u, 5u, 47u, 95u})
    CHECK(interp_even(grid, f, grid.nodes[i]) == doctest::Approx(f(static_cast<Eigen::Index>(i))).epsilon(1e-14));

  for (const double x : {0.0, 0.001, 0.3, 1.7})
    CHECK(std::abs(interp_even(grid, f, x) - std::exp(-x * x)) < 5e-6);

  // Even in the argument by construction.
  CHECK(interp_even(grid, f, -0.42) == interp_even(grid, f, 0.42));

  CHECK_THROWS_AS(interp_even(grid, f, grid.nodes[grid.n - 1] * 1.01), std::domain_error);
  CHECK_THROWS_AS(interp_even(grid, Eigen::VectorXd::Zero(95), 0.1), std::invalid_argument);
}

TEST_CASE("coefficient_C composes the channel amplitudes") {
  const auto par = new_params(1, 1, 1, 1.0);
  const auto res = solve_bound_state(par, Parity::even, opts(200, 300));
  REQUIRE(res.has_value());
  const double E = res->energy;
  const auto& grid = res->grid;
  const Eigen::VectorXd c1 = recover_c1(res->c, E, par, grid);

  // Negative definite at moderate momenta: both amplitudes are positive and
  // the energy denominator sits strictly below zero.
  std::mt19937 rng(7788);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int it = 0; it < 50; ++it) {
    const double p1 = u(rng), p2 = u(rng);
    const double C = coefficient_C(p1, p2, res->c, c1, E, par, grid);
    CHECK(std::isfinite(C));
    CHECK(C < 0.0);
    const double den = E - p1 * p1 / (2.0 * par.m1) - p2 * p2 / (2.0 * par.m2);
    const double expect =
        (interp_even(grid, res->c, p1 + p2) + interp_even(grid, c1, p2)) / den;
    CHECK(C == doctest::Approx(expect).epsilon(1e-14));
  }

  // Quadratic decay: |C| (p1^2 + p2^2) stays bounded by the amplitude scale.
  const double amp = res->c.maxCoeff() + c1.maxCoeff();
  for (const double t : {3.0, 6.0, 12.0}) {
    const double C = coefficient_C(t, t, res->c, c1, E, par, grid);
    CHECK(std::abs(C) * 2.0 * t * t <= 2.0 * std::max(par.m1, par.m2) * amp * 1.25);
  }
  const double far = std::abs(coefficient_C(12.0, 12.0, res->c, c1, E, par, grid));
  const double near = std::abs(coefficient_C(3.0, 3.0, res->c, c1, E, par, grid));
  CHECK(far < near);

  CHECK_THROWS_AS(
      coefficient_C(grid.nodes[grid.n - 1] * 1.5, 0.0, res->c, c1, E, par, grid),
      std::domain_error);
}

TEST_CASE("coefficient_C reduces to the dimer channel when the impurity is off") {
  const auto par = new_params(1, 1, 1, std::nullopt);
  const auto grid = build_grid(64, 1.0);
  Eigen::VectorXd c(64);
  for (std::size_t i = 0; i < grid.n; ++i)
    c(static_cast<Eigen::Index>(i)) = 1.0 / (1.0 + grid.nodes[i] * grid.nodes[i]);
  const double E = -2.0;
  const Eigen::VectorXd c1 = recover_c1(c, E, par, grid);
  for (const double p1 : {0.3, 1.1}) {
    for (const double p2 : {-0.7, 0.2}) {
      const double C = coefficient_C(p1, p2, c, c1, E, par, grid);
      const double den = E - p1 * p1 / (2.0 * par.m1) - p2 * p2 / (2.0 * par.m2);
      CHECK(C == doctest::Approx(interp_even(grid, c, p1 + p2) / den).epsilon(1e-14));
    }
  }
}
