#pragma once

#include <optional>

namespace dimer {

/// Relative tolerance for refusing t-matrix evaluation at its pole.
inline constexpr double kPoleRelTol = 1e-12;

/// Relative half-width of the on-shell window in which h_factor switches to
/// its analytic limit.
inline constexpr double kOnshellRelTol = 1e-8;

/// Relative margin below the dissociation momentum inside which scattering
/// solves are refused as numerically meaningless.
inline constexpr double kThresholdRelMargin = 1e-6;

/// Couplings and derived scales for two distinguishable atoms (1 and 2) bound
/// by a zero-range interaction, with atom 1 also coupled to a fixed
/// zero-range impurity at the origin.  hbar = 1 throughout.
///
/// Attractive couplings are encoded by their scattering lengths: a > 0 for
/// the interatomic pair, a1 of either sign for the atom-impurity pair, and
/// a1 == nullopt meaning the impurity coupling is switched off entirely.
struct PhysicalParams {
  double m1 = 0;  ///< mass of the impurity-coupled atom
  double m2 = 0;  ///< mass of the spectator atom
  double a = 0;   ///< interatomic scattering length, > 0
  std::optional<double> a1;  ///< atom-impurity scattering length, nullopt = off

  // Derived, filled in by new_params.
  double m = 0;    ///< reduced mass m1*m2/(m1+m2)
  double M = 0;    ///< total mass m1+m2
  double g = 0;    ///< interatomic coupling, -1/(m*a)
  double g1 = 0;   ///< atom-impurity coupling, -1/(m1*a1); 0 when off
  double eps = 0;  ///< dimer binding energy, -1/(2*m*a^2)
  std::optional<double> eps1;  ///< atom-impurity binding energy, only for a1 > 0
};

/// Validates inputs and fills in the derived fields.  Throws
/// std::invalid_argument on m1 <= 0, m2 <= 0, a <= 0, or a1 == 0.
PhysicalParams new_params(double m1, double m2, double a, std::optional<double> a1);

/// Two-body transition amplitude 1 / (1/g + sqrt(mass / (-2*E))) for a
/// zero-range pair of reduced mass `mass` and scattering length `length`,
/// evaluated at total pair energy E < 0.  `length` == nullopt means the
/// coupling is off and the amplitude is exactly 0.  Throws std::domain_error
/// for E >= 0 or within kPoleRelTol (relatively) of the bound-state pole at
/// -1/(2*mass*length^2), which exists only for length > 0.
double t_matrix(double E, double mass, std::optional<double> length);

/// Inhomogeneity weight h(p) = (p^2 - P^2) * t(E - p^2/(2M)) entering the
/// scattering equations at total energy E = eps + P^2/(2M).  The pole of t at
/// p = P cancels the zero of (p^2 - P^2); within kOnshellRelTol of the
/// cancellation the analytic limit -2*M/(m^2*a^3) is used.  Requires P
/// strictly inside the applicability window (see applicability()).
double h_factor(double p, double P, const PhysicalParams& par);

enum class Applicability {
  ok,
  above_dissociation,      // E = eps + P^2/(2M) >= 0: dimer can break up
  above_impurity_capture,  // a1 > 0 and E >= eps1: atom 1 can be captured
  no_valid_P,              // a1 > 0 and eps1 <= eps: no elastic window at all
};

struct ApplicabilityVerdict {
  bool valid = false;
  double p_max = 0;  ///< supremum of valid incident momenta (0 for no_valid_P)
  Applicability reason = Applicability::ok;
};

/// Decides whether incident momentum P >= 0 keeps the collision purely
/// elastic, and reports the supremum p_max of valid momenta.
ApplicabilityVerdict applicability(const PhysicalParams& par, double P);

/// Reflection probability 1 / (1 + (P*a1)^2) of a single free atom of any
/// mass off the impurity.  Returns 0 when a1 is off.
double single_atom_reflection(double P, std::optional<double> a1);

/// Reflection probability of a structureless particle of mass M whose
/// coupling to the impurity is the dimer's g1: 1 / (1 + (P*a1*m1/M)^2).
/// Returns 0 when a1 is off.
double point_dimer_reflection(double P, const PhysicalParams& par);

/// Normalized dimer relative-coordinate wave function exp(-|x|/a)/sqrt(a).
double dimer_phi(double x, double a);

}  // namespace dimer
