#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <utility>

#include "deltadimer/params.hpp"
#include "deltadimer/quadrature.hpp"

namespace dimer {

struct MomentumGrid;

enum class Parity { even, odd };

/// Exchange kernel of the dimer-impurity integral equations, sampled on a
/// momentum grid at fixed total energy E.
struct KernelMatrix {
  double E = 0;
  Parity parity = Parity::even;
  Eigen::MatrixXd entries;           ///< entries(i, j) = K_parity(nodes[i], nodes[j])
  const MomentumGrid* grid = nullptr;  ///< grid the matrix was sampled on (not owned)
  std::size_t quad_n = 0;
};

/// Full-line kernel value
///   K(p, s) = (1/2pi) int dk t1(E - k^2/(2 m2)) / (D_p(k) D_s(k)),
///   D_x(k)  = (x - k)^2/(2 m1) + k^2/(2 m2) - E,
/// the one-impurity-interaction exchange amplitude between dimer states of
/// pair momenta p and s.  Real and finite for E < 0 below every two-body
/// threshold; identically 0 when the impurity coupling is off.  Throws
/// std::domain_error for E >= 0 or, when a1 > 0, for E >= eps1 ("atom-1
/// capture channel open").
double kernel_value(double p, double s, double E, const PhysicalParams& par,
                    std::size_t quad_n = 400);

/// Even/odd projections (K(p,s) + K(p,-s))/2 and (K(p,s) - K(p,-s))/2.
std::pair<double, double> kernel_parity(double p, double s, double E,
                                        const PhysicalParams& par,
                                        std::size_t quad_n = 400);

/// Samples one parity projection on all grid node pairs.  Deterministic:
/// equal inputs give bitwise-equal matrices.
KernelMatrix kernel_matrix(const MomentumGrid& grid, double E, const PhysicalParams& par,
                           Parity parity, std::size_t quad_n = 400);

/// Assembles both parity projections in one pass, sharing the inner
/// quadrature evaluations between them; roughly half the cost of two
/// kernel_matrix calls.
std::pair<KernelMatrix, KernelMatrix> kernel_matrix_pair(const MomentumGrid& grid, double E,
                                                         const PhysicalParams& par,
                                                         std::size_t quad_n = 400);

}  // namespace dimer
