#include "deltadimer/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dimer {

void gauss_legendre_01(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  if (n == 0) throw std::invalid_argument("gauss_legendre_01 requires n > 0");
  x.resize(n);
  w.resize(n);
  // Roots of P_n on (-1, 1) from the Tricomi initial guess, polished by
  // Newton; symmetry halves the work.
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * static_cast<double>(j) + 1.0) * z * p1 - static_cast<double>(j) * p2) /
             (static_cast<double>(j) + 1.0);
      }
      pp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    // Map from [-1, 1] to [0, 1]; z decreases with i, so these fill from the top.
    const double wi = 1.0 / ((1.0 - z * z) * pp * pp);  // = 2/((1-z^2)pp^2) / 2
    x[n - 1 - i] = 0.5 * (1.0 + z);
    w[n - 1 - i] = wi;
    x[i] = 0.5 * (1.0 - z);
    w[i] = wi;
  }
}

MomentumGrid build_grid(std::size_t n, double scale, std::optional<double> P) {
  if (n < 16) throw std::invalid_argument("build_grid requires n >= 16");
  if (!(scale > 0)) throw std::invalid_argument("build_grid requires scale > 0");
  if (P && !(*P > 0)) throw std::invalid_argument("on-shell momentum must be positive");

  std::vector<double> u, gw;
  gauss_legendre_01(n, u, gw);

  MomentumGrid grid;
  grid.map_scale = scale;
  grid.nodes.reserve(n + 1);
  grid.weights.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double om = 1.0 - u[i];
    const double s = scale * u[i] / om;
    if (P && s == *P) continue;  // keep the injected node unique
    grid.nodes.push_back(s);
    grid.weights.push_back(gw[i] * scale / (om * om));
  }
  if (P) {
    const auto it = std::lower_bound(grid.nodes.begin(), grid.nodes.end(), *P);
    const auto idx = static_cast<std::size_t>(it - grid.nodes.begin());
    grid.nodes.insert(it, *P);
    grid.weights.insert(grid.weights.begin() + static_cast<std::ptrdiff_t>(idx), 0.0);
    grid.onshell_index = idx;
  }
  grid.n = grid.nodes.size();
  return grid;
}

std::complex<double> pv_integrate(const MomentumGrid& grid,
                                  std::span<const std::complex<double>> G,
                                  double P) {
  if (!grid.onshell_index) throw std::invalid_argument("pv_integrate needs an on-shell node");
  if (G.size() != grid.n) throw std::invalid_argument("pv_integrate sample size mismatch");
  const std::size_t j0 = *grid.onshell_index;
  if (grid.nodes[j0] != P)
    throw std::invalid_argument("pv_integrate P differs from the grid's on-shell node");

  // PV int_0^inf ds/(s^2-P^2) = 0, so subtracting G(P) removes the pole
  // without leaving a compensation integral behind.
  const std::complex<double> GP = G[j0];
  std::complex<double> acc = 0;
  const double P2 = P * P;
  for (std::size_t j = 0; j < grid.n; ++j) {
    if (j == j0) continue;
    acc += grid.weights[j] * (G[j] - GP) / (grid.nodes[j] * grid.nodes[j] - P2);
  }
  acc += std::complex<double>(0.0, std::numbers::pi / (2.0 * P)) * GP;
  return acc;
}

}  // namespace dimer
