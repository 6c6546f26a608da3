#include "deltadimer/kernel.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dimer {

namespace {

// Gauss-Legendre base rules keyed by node count; kernel assembly reuses the
// same rule tens of thousands of times.
const std::pair<std::vector<double>, std::vector<double>>& base_rule(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::scoped_lock lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::pair<std::vector<double>, std::vector<double>> rule;
    gauss_legendre_01(n, rule.first, rule.second);
    it = cache.emplace(n, std::move(rule)).first;
  }
  return it->second;
}

void check_domain(double E, const PhysicalParams& par, std::size_t quad_n) {
  if (quad_n < 16) throw std::invalid_argument("kernel quadrature needs quad_n >= 16");
  if (!(E < 0)) throw std::domain_error("kernel requires E < 0");
  if (par.eps1 && E >= *par.eps1) throw std::domain_error("atom-1 capture channel open");
}

// Scale on which the k integrand varies: set by both momenta, both two-body
// momenta at energy |E|, and the inverse scattering lengths.
double k_scale(double p, double s, double E, const PhysicalParams& par) {
  double sc = std::max(std::abs(p), std::abs(s));
  sc = std::max(sc, std::sqrt(2.0 * std::max(par.m1, par.m2) * -E));
  sc = std::max(sc, 1.0 / par.a);
  if (par.a1) sc = std::max(sc, 1.0 / std::abs(*par.a1));
  return sc;
}

struct EntryPair {
  double pp;  // K(p, s)
  double pm;  // K(p, -s)
};

// Evaluates K(p, s) and K(p, -s) together: the integrands share the
// t1 factor and the four propagator denominators
//   D_{+-p}(+-k) = (p -+ k)^2/(2 m1) + k^2/(2 m2) - E.
EntryPair kernel_pair_raw(double p, double s, double E, const PhysicalParams& par,
                          const std::vector<double>& u, const std::vector<double>& gw) {
  const double inv2m1 = 0.5 / par.m1;
  const double inv2m2 = 0.5 / par.m2;
  const double mratio = par.m1 / par.m2;
  const double c0 = -2.0 * par.m1 * E;  // kappa1^2 at k = 0
  const double a1 = par.a1 ? *par.a1 : 0.0;
  const double inv_m1 = 1.0 / par.m1;
  const double sc = k_scale(p, s, E, par);

  double acc_pp = 0, acc_pm = 0;
  const std::size_t nq = u.size();
  for (std::size_t j = 0; j < nq; ++j) {
    const double om = 1.0 - u[j];
    const double k = sc * u[j] / om;
    const double wj = gw[j] * sc / (om * om);
    // t1(E - k^2/(2 m2)) in pole-explicit form; the argument stays strictly
    // below eps1, so the denominator cannot vanish.
    const double kap1 = std::sqrt(mratio * k * k + c0);
    const double t1 = kap1 * inv_m1 / (1.0 - a1 * kap1);
    const double dpk = (p - k) * (p - k) * inv2m1 + k * k * inv2m2 - E;
    const double dpmk = (p + k) * (p + k) * inv2m1 + k * k * inv2m2 - E;
    const double dsk = (s - k) * (s - k) * inv2m1 + k * k * inv2m2 - E;
    const double dsmk = (s + k) * (s + k) * inv2m1 + k * k * inv2m2 - E;
    acc_pp += wj * t1 * (1.0 / (dpk * dsk) + 1.0 / (dpmk * dsmk));
    acc_pm += wj * t1 * (1.0 / (dpk * dsmk) + 1.0 / (dpmk * dsk));
  }
  const double pref = 1.0 / (2.0 * std::numbers::pi);
  return {pref * acc_pp, pref * acc_pm};
}

}  // namespace

double kernel_value(double p, double s, double E, const PhysicalParams& par,
                    std::size_t quad_n) {
  check_domain(E, par, quad_n);
  if (!par.a1) return 0.0;
  const auto& [u, gw] = base_rule(quad_n);
  return kernel_pair_raw(p, s, E, par, u, gw).pp;
}

std::pair<double, double> kernel_parity(double p, double s, double E,
                                        const PhysicalParams& par, std::size_t quad_n) {
  check_domain(E, par, quad_n);
  if (!par.a1) return {0.0, 0.0};
  const auto& [u, gw] = base_rule(quad_n);
  const EntryPair e = kernel_pair_raw(p, s, E, par, u, gw);
  return {0.5 * (e.pp + e.pm), 0.5 * (e.pp - e.pm)};
}

KernelMatrix kernel_matrix(const MomentumGrid& grid, double E, const PhysicalParams& par,
                           Parity parity, std::size_t quad_n) {
  auto [even, odd] = kernel_matrix_pair(grid, E, par, quad_n);
  return parity == Parity::even ? std::move(even) : std::move(odd);
}

std::pair<KernelMatrix, KernelMatrix> kernel_matrix_pair(const MomentumGrid& grid, double E,
                                                         const PhysicalParams& par,
                                                         std::size_t quad_n) {
  check_domain(E, par, quad_n);
  const auto n = static_cast<Eigen::Index>(grid.n);
  KernelMatrix even{E, Parity::even, Eigen::MatrixXd::Zero(n, n), &grid, quad_n};
  KernelMatrix odd{E, Parity::odd, Eigen::MatrixXd::Zero(n, n), &grid, quad_n};
  if (!par.a1) return {std::move(even), std::move(odd)};

  const auto& [u, gw] = base_rule(quad_n);
  // Both projections inherit the (p, s) symmetry of the full-line kernel, so
  // only the upper triangle is evaluated.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = grid.nodes[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i; j < n; ++j) {
      const double s = grid.nodes[static_cast<std::size_t>(j)];
      const EntryPair e = kernel_pair_raw(p, s, E, par, u, gw);
      const double ev = 0.5 * (e.pp + e.pm);
      const double od = 0.5 * (e.pp - e.pm);
      even.entries(i, j) = ev;
      even.entries(j, i) = ev;
      odd.entries(i, j) = od;
      odd.entries(j, i) = od;
    }
  }
  return {std::move(even), std::move(odd)};
}

}  // namespace dimer
