#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "deltadimer/params.hpp"

namespace dimer {

/// Grid and regulator choices for the time-dependent solver.  Zero means
/// "derive a default": w = a/20, dx = w/4, Lr = max(12a, 40w),
/// LX = |x0| + 8 sigma plus the absorber width when absorbers are on.
struct OracleConfig {
  double w = 0;    ///< Gaussian regulator width replacing the contact potentials
  double dx = 0;   ///< target grid spacing for both axes; must end up <= w/4
  double LX = 0;   ///< center-of-mass half box: X in [-LX, LX)
  double Lr = 0;   ///< relative-coordinate half box: r in [-Lr, Lr)
  bool absorbers = false;  ///< absorbing ramps on both X edges
  double absorber_width = 0;     ///< ramp length; default 10a
  double absorber_strength = 0;  ///< peak damping rate; default 0.5
};

/// Two-coordinate wave function psi(X, r) on a rectangular periodic grid,
/// X the pair's center of mass and r the interatomic separation.
struct Grid2DState {
  std::size_t nX = 0, nr = 0;
  double LX = 0, Lr = 0;
  double dX = 0, dr = 0;
  std::vector<std::complex<double>> psi;  ///< row-major, psi[iX * nr + ir]
  double t = 0;
  double norm = 1;  ///< current integral of |psi|^2
  double absorbed_left = 0, absorbed_right = 0;  ///< mass removed at each X edge
  // Preparation provenance, used by checks and by measure_RT.
  double w = 0, P0 = 0, sigma = 0, x0 = 0;
  double eps_w = 0;  ///< ground-state energy of the regulated pair interaction
  double E0 = 0;     ///< total <H> at preparation
  bool absorbers = false;
  double absorber_width = 0, absorber_strength = 0;
};

/// Area-one Gaussian of width w standing in for a contact interaction.
double regulated_delta(double x, double w);

/// Ground state of the regulated pair Hamiltonian p^2/(2m) + g delta_w(r) on
/// an nr-point periodic grid of half extent Lr, via Lanczos iteration with
/// the same spectral kinetic operator the propagator uses.  Returns the
/// normalized real wave function (positive, sum |phi|^2 dr = 1) and its
/// energy.
std::pair<std::vector<double>, double> relax_ground_state(const PhysicalParams& par, double w,
                                                          double Lr, std::size_t nr);

/// Dimer wave packet phi_w(r) * exp(-(X-x0)^2/(4 sigma^2) + i P0 X),
/// normalized on the grid.  Preconditions: sigma >= 2a, x0 <= -4 sigma, the
/// momentum window P0 -+ 3/(2 sigma) inside the elastic range, dx <= w/4,
/// and (with absorbers) |x0| + 3 sigma clear of the absorber ramp.
Grid2DState prepare_packet(const PhysicalParams& par, double P0, double x0, double sigma,
                           const OracleConfig& cfg = {});

/// Strang-split evolution over `steps` steps of size dt: half potential
/// phase, exact kinetic phase in momentum space, half potential phase, then
/// the absorber mask (mass removed is added to the edge ledgers before
/// masking).  Requires dt * max|V| <= 0.15; without absorbers the norm must
/// return within 1e-6 and <H> within 1e-4 relative, else throws
/// std::runtime_error.
void propagate(Grid2DState& st, const PhysicalParams& par, double w, double dt,
               std::size_t steps);

struct RTMeasure {
  double R = 0;        ///< mass left of -z plus the left-edge ledger
  double T = 0;        ///< mass right of +z plus the right-edge ledger
  double trapped = 0;  ///< mass still inside |X| < z
  double norm_drift = 0;  ///< |norm + ledgers - 1|
};

/// Splits the probability at z = 10 * max(a, |a1|, w).  Throws
/// std::domain_error ("insufficient separation") when more than 1e-4 of the
/// mass is still inside the window; propagate longer before measuring.
RTMeasure measure_RT(const Grid2DState& st, const PhysicalParams& par);

/// Mass still inside the measurement window; the loop-control companion of
/// measure_RT that never throws.
double separation_residual(const Grid2DState& st, const PhysicalParams& par);

/// Total <H>/<1> with spectral kinetic terms and the regulated potentials.
double total_energy(const Grid2DState& st, const PhysicalParams& par);

/// Expectation values of the packet's center of mass: <X> and <P_X>.
std::pair<double, double> packet_center(const Grid2DState& st);

/// Position density marginal over r: rho(X_i) dX sums to the norm.
std::vector<double> x_marginal(const Grid2DState& st);

/// Smallest 2^a 3^b 5^c >= n; FFT-friendly grid sizes.
std::size_t next_fast_size(std::size_t n);

}  // namespace dimer
