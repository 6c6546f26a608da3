#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "deltadimer/kernel.hpp"
#include "deltadimer/params.hpp"
#include "deltadimer/quadrature.hpp"

namespace dimer {

/// Below-threshold elastic scattering of the dimer off the impurity at
/// incident momentum P, split into parity channels.
struct ScatteringResult {
  double P = 0;
  double E = 0;  ///< eps + P^2/(2M)
  Eigen::VectorXcd f_even;  ///< off-shell amplitude samples on grid.nodes
  Eigen::VectorXcd f_odd;
  std::complex<double> f_even_onshell;
  std::complex<double> f_odd_onshell;
  std::complex<double> f_plus;   ///< f(+P) = f_even(P) + f_odd(P)
  std::complex<double> f_minus;  ///< f(-P) = f_even(P) - f_odd(P)
  std::complex<double> r_amp;    ///< f(-P) / (2P)
  std::complex<double> t_amp;    ///< 1 + i f(+P) / (2P)
  double R = 0;
  double T = 0;
  double unitarity_defect = 0;  ///< |R + T - 1|
  double rcond = 0;             ///< reciprocal condition estimate of the worst solve
  MomentumGrid grid;
};

/// Solves the inhomogeneous channel equation
///   f(p) = h(p) [ K(p, P) + (1/pi) int_0^inf K(p, s) f(s) / (s^2 - P^2 - i0+) ds ]
/// on a grid that carries P as its injected on-shell node, using the
/// principal-value weights of pv_integrate.  Throws std::domain_error when P
/// is not elastic or sits within kThresholdRelMargin of the dissociation
/// momentum, std::invalid_argument when the grid lacks the on-shell node, and
/// std::runtime_error when the linear-solve residual exceeds 1e-10.
Eigen::VectorXcd solve_offshell(const PhysicalParams& par, double P, Parity parity,
                                const MomentumGrid& grid, std::size_t quad_n = 400);

/// Same, reusing an already assembled kernel matrix of the wanted parity.
Eigen::VectorXcd solve_offshell(const PhysicalParams& par, double P, const KernelMatrix& K,
                                double* rcond = nullptr);

struct RTResult {
  double R = 0;
  double T = 0;
  std::complex<double> r_amp;
  std::complex<double> t_amp;
};

/// Reflection and transmission probabilities from the two on-shell values
/// f(+P) and f(-P):  r = f(-P)/(2P), t = 1 + i f(+P)/(2P).
RTResult reflection_transmission(double P, std::complex<double> f_plus,
                                 std::complex<double> f_minus);

/// Full pipeline: grid with injected node, one shared kernel assembly, both
/// parity solves, on-shell extraction, observables.
ScatteringResult solve_scattering(const PhysicalParams& par, double P,
                                  std::size_t grid_n = 300, std::size_t quad_n = 400,
                                  double scale = 0);

enum class SweepAxis { P, a1_ratio };

/// One row of a parameter sweep.  Rows the solver refuses (past a threshold,
/// inside the near-threshold margin, or with unphysical parameters) are
/// flagged shaded and carry NaN observables.
struct SweepRow {
  double value = 0;
  double R = 0;
  double T = 0;
  std::complex<double> f_even_onshell;
  std::complex<double> f_odd_onshell;
  double unitarity_defect = 0;
  bool shaded = false;
};

struct SweepOptions {
  std::size_t grid_n = 300;
  std::size_t quad_n = 400;
  double scale = 0;
  unsigned jobs = 1;
};

/// Sweeps either the incident momentum (axis P: values are P, base.a1 fixed)
/// or the impurity scattering length (axis a1_ratio: values are a1/a, P =
/// fixed_P).  Rows come back in input order regardless of jobs.
std::vector<SweepRow> sweep(const PhysicalParams& base, SweepAxis axis,
                            std::span<const double> values, double fixed_P,
                            const SweepOptions& opt = {});

}  // namespace dimer
