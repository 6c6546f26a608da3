#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <utility>

#include "deltadimer/kernel.hpp"
#include "deltadimer/params.hpp"
#include "deltadimer/quadrature.hpp"

namespace dimer {

/// Dimer-impurity bound state below both two-body thresholds.
struct BoundStateResult {
  double energy = 0;  ///< total energy, < min(eps, eps1)
  Parity parity = Parity::even;
  Eigen::VectorXd c;  ///< dimer-channel amplitude on grid.nodes, peak value +1
  MomentumGrid grid;
  double lambda_residual = 0;  ///< |lambda_max(energy) - 1| at the converged root
};

/// Largest eigenvalue of the homogeneous kernel operator
///   (B f)(p) = t(E - p^2/(2M)) (1/pi) int_0^inf K_parity(p, s) f(s) ds
/// discretized on `grid`.  A bound state sits where lambda_max(E) = 1.
/// Exactly 0 when the impurity coupling is off.  Requires a1 > 0 otherwise,
/// and E < min(eps, eps1, 0).
double bound_eigenvalue(double E, Parity parity, const PhysicalParams& par,
                        const MomentumGrid& grid, std::size_t quad_n = 400);

struct BoundOptions {
  std::size_t grid_n = 300;
  std::size_t quad_n = 400;
  double scale = 0;  ///< momentum-map scale; 0 picks max(a, a1)
  std::optional<double> E_lo;  ///< search window floor; default 10*min(eps, eps1)
  std::optional<double> E_hi;  ///< search window ceiling; default min(eps, eps1)*(1+1e-9)
};

/// Scans lambda_max(E) over a logarithmic energy ladder, brackets the
/// lambda = 1 crossing, and polishes it to |lambda - 1| <= 1e-10.  Returns
/// std::nullopt when no crossing exists in the window (always, for the odd
/// channel and for a1 off).  The returned eigenvector is normalized to a
/// positive peak of unit magnitude.
std::optional<BoundStateResult> solve_bound_state(const PhysicalParams& par, Parity parity,
                                                  const BoundOptions& opt = {});

/// Impurity-channel amplitude recovered from the dimer-channel one:
///   c1(k) = -t1(E - k^2/(2 m2)) (1/2pi) int ds c(s) / D_s(k)
/// folded onto the half line with the parity of c, sampled at grid.nodes.
/// The sign pairs with c(p) = -t(E - p^2/(2M)) (1/2pi) int dk c1(k) / D_p(k);
/// the two minus signs cancel in the composed eigenproblem.  Zero when the
/// impurity coupling is off.
Eigen::VectorXd recover_c1(const Eigen::VectorXd& c, double E, const PhysicalParams& par,
                           const MomentumGrid& grid, Parity parity = Parity::even);

/// Full two-atom momentum amplitude
///   C(p1, p2) = [c(|p1 + p2|) + c1(|p2|)] / (E - p1^2/(2 m1) - p2^2/(2 m2))
/// for an even-channel state, with cubic interpolation of the sampled
/// amplitudes.  Throws std::domain_error when an interpolation argument lies
/// beyond the last grid node (no silent extrapolation).
double coefficient_C(double p1, double p2, const Eigen::VectorXd& c,
                     const Eigen::VectorXd& c1, double E, const PhysicalParams& par,
                     const MomentumGrid& grid);

/// Cubic (4-point Lagrange) interpolation of samples of an even function of
/// momentum known on grid.nodes; mirrors the stencil across 0 near the first
/// node.  Throws std::domain_error for |x| beyond the last node.
double interp_even(const MomentumGrid& grid, const Eigen::VectorXd& values, double x);

}  // namespace dimer
