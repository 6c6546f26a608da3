#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dimer {

/// Gauss-Legendre nodes and weights on [0, 1], computed by Newton iteration
/// on the Legendre polynomial.  Accurate to machine precision for n <= 2048.
void gauss_legendre_01(std::size_t n, std::vector<double>& x, std::vector<double>& w);

/// Half-line momentum grid: n Gauss-Legendre nodes mapped by
/// s = scale * u / (1 - u), plus (optionally) one zero-weight node injected
/// bitwise at the on-shell momentum P so integrands can be sampled there.
struct MomentumGrid {
  std::vector<double> nodes;    ///< strictly increasing, all > 0
  std::vector<double> weights;  ///< mapped quadrature weights; 0 at the injected node
  std::optional<std::size_t> onshell_index;  ///< position of the injected node
  double map_scale = 0;
  std::size_t n = 0;  ///< total node count, including any injected node
};

/// Builds the grid.  Throws std::invalid_argument for n < 16, scale <= 0, or
/// P <= 0 when given.
MomentumGrid build_grid(std::size_t n, double scale, std::optional<double> P = {});

/// Integral of G over [0, inf) against 1 / (s^2 - P^2 - i0+), where G is
/// sampled on grid.nodes and P is the grid's injected on-shell momentum:
/// principal value by pole subtraction (PV of 1/(s^2-P^2) itself vanishes on
/// the half line), plus the residue term i*pi*G(P)/(2P).  Throws
/// std::invalid_argument if the grid has no on-shell node or sizes mismatch.
std::complex<double> pv_integrate(const MomentumGrid& grid,
                                  std::span<const std::complex<double>> G,
                                  double P);

}  // namespace dimer
