#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

#include "deltadimer/kernel.hpp"
#include "deltadimer/params.hpp"
#include "deltadimer/quadrature.hpp"

using namespace dimer;

namespace {

double rel_diff(double x, double y) {
  return std::abs(x - y) / std::max(std::abs(x), std::abs(y));
}

// Bare integrand of the exchange kernel, written out independently of the
// library's evaluation path.
double integrand(double k, double p, double s, double E, const PhysicalParams& par) {
  const double kap1 = std::sqrt(-2.0 * par.m1 * (E - k * k / (2.0 * par.m2)));
  const double t1 = kap1 / (par.m1 * (1.0 - *par.a1 * kap1));
  const double dp = (p - k) * (p - k) / (2.0 * par.m1) + k * k / (2.0 * par.m2) - E;
  const double ds = (s - k) * (s - k) / (2.0 * par.m1) + k * k / (2.0 * par.m2) - E;
  return t1 / (dp * ds);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double eps,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double eps) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 48);
}

// Reference kernel value: adaptive quadrature over the full line, split at
// k = 0, with a truncation radius far beyond every physical scale.
double kernel_reference(double p, double s, double E, const PhysicalParams& par) {
  const auto f = [&](double k) { return integrand(k, p, s, E, par); };
  const double L = 4000.0 * std::max({1.0, std::abs(p), std::abs(s)});
  const double eps = 1e-13;
  const double total = integrate(f, -L, 0.0, eps) + integrate(f, 0.0, L, eps);
  return total / (2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("kernel is identically zero without the impurity") {
  const auto par = new_params(1, 1, 1, std::nullopt);
  for (const double p : {0.0, 0.3, 1.7}) {
    for (const double s : {-2.0, 0.9}) {
      CHECK(kernel_value(p, s, -2.0, par) == 0.0);
      const auto [ev, od] = kernel_parity(std::abs(p) + 0.1, std::abs(s), -2.0, par);
      CHECK(ev == 0.0);
      CHECK(od == 0.0);
    }
  }
  const auto grid = build_grid(32, 1.0);
  const auto K = kernel_matrix(grid, -2.0, par, Parity::even);
  CHECK(K.entries.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel symmetry under argument swap and reflection") {
  const auto par = new_params(1, 1, 1, -1.0);
  const auto par2 = new_params(1, 2, 1, 0.9);  // attractive, uneven masses
  const double E1 = 2.0 * par.eps;
  const double E2 = 1.2 * par2.eps;  // below the capture threshold as well
  REQUIRE(E2 < *par2.eps1);

  std::mt19937 rng(1357);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 40; ++i) {
    const double p = u(rng), s = u(rng);
    const double k1 = kernel_value(p, s, E1, par);
    CHECK(rel_diff(k1, kernel_value(s, p, E1, par)) < 1e-10);
    CHECK(rel_diff(k1, kernel_value(-p, -s, E1, par)) < 1e-10);
    const double k2 = kernel_value(p, s, E2, par2);
    CHECK(rel_diff(k2, kernel_value(s, p, E2, par2)) < 1e-10);
    CHECK(rel_diff(k2, kernel_value(-p, -s, E2, par2)) < 1e-10);
  }
}

TEST_CASE("kernel matches an independent adaptive quadrature") {
  const auto par = new_params(1, 1, 1, -1.0);
  const double E = 2.0 * par.eps;
  CHECK(rel_diff(kernel_value(0.0, 0.0, E, par), kernel_reference(0.0, 0.0, E, par)) <
        1e-8);
  CHECK(rel_diff(kernel_value(0.7, 0.3, E, par), kernel_reference(0.7, 0.3, E, par)) <
        1e-8);
  CHECK(rel_diff(kernel_value(1.1, -0.6, E, par),
                 kernel_reference(1.1, -0.6, E, par)) < 1e-8);

  const auto att = new_params(1, 1, 1, 0.9);
  const double Ea = -0.9;
  REQUIRE(Ea < *att.eps1);
  CHECK(rel_diff(kernel_value(0.4, 0.2, Ea, att), kernel_reference(0.4, 0.2, Ea, att)) <
        1e-8);
}

TEST_CASE("parity projections reconstruct the full-line kernel") {
  const auto par = new_params(1, 1, 1, -1.0);
  const double E = -1.7;
  std::mt19937 rng(2468);
  std::uniform_real_distribution<double> u(0.05, 2.5);
  for (int i = 0; i < 25; ++i) {
    const double p = u(rng), s = u(rng);
    const auto [ev, od] = kernel_parity(p, s, E, par);
    const double mag = std::max(std::abs(ev), std::abs(od));
    for (const double sp : {1.0, -1.0}) {
      for (const double ss : {1.0, -1.0}) {
        const double full = kernel_value(sp * p, ss * s, E, par);
        CHECK(std::abs(full - (ev + sp * ss * od)) < 1e-12 * mag);
      }
    }
  }
}

TEST_CASE("odd projection vanishes linearly at zero momentum") {
  const auto par = new_params(1, 1, 1, -1.0);
  const double E = -2.0;
  const double p = 0.8;
  const auto [ev, od6] = kernel_parity(p, 1e-6, E, par);
  const auto [ev7, od7] = kernel_parity(p, 1e-7, E, par);
  (void)ev7;
  CHECK(std::abs(od6) < 1e-4 * std::abs(ev));
  CHECK(std::abs(od7) < std::abs(od6));
  // K(p, s) is smooth and even in s at s = 0, so the odd part is linear.
  CHECK(std::abs(od6) / std::abs(od7) == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("kernel matrices are symmetric and converge with the inner rule") {
  const auto par = new_params(1, 1, 1, -1.0);
  const double E = -1.5;
  const auto grid = build_grid(32, 1.0);
  const auto [even, odd] = kernel_matrix_pair(grid, E, par, 400);
  CHECK((even.entries - even.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((odd.entries - odd.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(even.entries.allFinite());
  CHECK(odd.entries.allFinite());
  CHECK(even.parity == Parity::even);
  CHECK(odd.parity == Parity::odd);
  CHECK(even.E == E);

  const auto coarse = kernel_matrix(grid, E, par, Parity::even, 200);
  const double scale = even.entries.cwiseAbs().maxCoeff();
  const double diff = (coarse.entries - even.entries).cwiseAbs().maxCoeff();
  CHECK(diff < 1e-8 * scale);
}

TEST_CASE("kernel integrand obeys the cubic tail bound") {
  const auto par = new_params(1, 1, 1, -1.0);
  const double E = -2.0;
  const double p = 1.5, s = 1.5;
  const double k0 =
      10.0 * std::max({1.0 / par.a, 1.0 / std::abs(*par.a1), p, s});
  for (const double dir : {1.0, -1.0}) {
    double prev = std::abs(integrand(dir * k0, p, s, E, par)) * k0 * k0 * k0;
    double k = k0;
    for (int step = 0; step < 6; ++step) {
      k *= 2.0;
      const double cur = std::abs(integrand(dir * k, p, s, E, par)) * k * k * k;
      CHECK(cur <= prev * 1.05);  // |f| k^3 keeps shrinking past the knee
      prev = cur;
    }
  }
}

TEST_CASE("kernel varies smoothly with energy") {
  // Two centered-difference estimates of dK/dE must agree to 1e-4 relative;
  // the bound-state root finder leans on this smoothness.
  const auto par = new_params(1, 1, 1, -1.0);
  const double E = -2.0, p = 0.5, s = 0.9;
  const auto dKdE = [&](double step) {
    return (kernel_value(p, s, E + step, par) - kernel_value(p, s, E - step, par)) /
           (2.0 * step);
  };
  const double d1 = dKdE(1e-4);
  const double d2 = dKdE(2e-4);
  CHECK(rel_diff(d1, d2) < 1e-4);
}

TEST_CASE("kernel rejects out-of-domain energies") {
  const auto par = new_params(1, 1, 1, -1.0);
  CHECK_THROWS_AS(kernel_value(0.1, 0.2, 0.0, par), std::domain_error);
  CHECK_THROWS_AS(kernel_value(0.1, 0.2, 0.5, par), std::domain_error);

  const auto att = new_params(1, 1, 1, 1.0);  // capture threshold at -0.5
  CHECK_THROWS_AS(kernel_value(0.1, 0.2, -0.4, att), std::domain_error);
  CHECK_THROWS_AS(kernel_value(0.1, 0.2, -0.5, att), std::domain_error);
  CHECK_NOTHROW(kernel_value(0.1, 0.2, -0.6, att));

  CHECK_THROWS_AS(kernel_value(0.1, 0.2, -2.0, par, 8), std::invalid_argument);

  const auto grid = build_grid(16, 1.0);
  CHECK_THROWS_AS(kernel_matrix(grid, 0.1, par, Parity::even), std::domain_error);
}
