#include "deltadimer/params.hpp"

#include <cmath>
#include <stdexcept>

namespace dimer {

PhysicalParams new_params(double m1, double m2, double a, std::optional<double> a1) {
  if (!(m1 > 0) || !(m2 > 0)) throw std::invalid_argument("masses must be positive");
  if (!(a > 0)) throw std::invalid_argument("interatomic scattering length must be positive");
  if (a1 && (*a1 == 0 || !std::isfinite(*a1)))
    throw std::invalid_argument("a1 must be finite and nonzero, or off");

  PhysicalParams par;
  par.m1 = m1;
  par.m2 = m2;
  par.a = a;
  par.a1 = a1;
  par.M = m1 + m2;
  par.m = m1 * m2 / par.M;
  par.g = -1.0 / (par.m * a);
  par.g1 = a1 ? -1.0 / (m1 * *a1) : 0.0;
  par.eps = -1.0 / (2.0 * par.m * a * a);
  if (a1 && *a1 > 0) par.eps1 = -1.0 / (2.0 * m1 * *a1 * *a1);
  return par;
}

double t_matrix(double E, double mass, std::optional<double> length) {
  if (!length) return 0.0;
  if (!(E < 0)) throw std::domain_error("t_matrix requires E < 0");
  const double len = *length;
  const double kappa = std::sqrt(-2.0 * mass * E);
  if (len > 0) {
    const double eb = -1.0 / (2.0 * mass * len * len);
    if (std::abs(E - eb) <= kPoleRelTol * std::abs(eb))
      throw std::domain_error("t_matrix evaluated at its bound-state pole");
  }
  // Pole-explicit form of 1 / (1/g + sqrt(mass/(-2E))) with g = -1/(mass*len).
  return kappa / (mass * (1.0 - len * kappa));
}

double h_factor(double p, double P, const PhysicalParams& par) {
  const auto verdict = applicability(par, P);
  if (!verdict.valid) throw std::domain_error("h_factor requires an elastic incident momentum");
  const double P2 = P * P;
  const double num = p * p - P2;
  if (std::abs(num) < kOnshellRelTol * P2) {
    // (p^2 - P^2) t(E - p^2/2M) -> -2M/(m^2 a^3) as p -> P: the simple pole
    // of t at the dimer energy cancels the explicit zero.
    return -2.0 * par.M / (par.m * par.m * par.a * par.a * par.a);
  }
  const double E = par.eps + P2 / (2.0 * par.M);
  return num * t_matrix(E - p * p / (2.0 * par.M), par.m, par.a);
}

ApplicabilityVerdict applicability(const PhysicalParams& par, double P) {
  ApplicabilityVerdict v;
  if (par.eps1 && *par.eps1 <= par.eps) {
    // The atom-impurity state lies below the dimer: any collision can end in
    // capture, so no incident momentum is elastic.
    v.p_max = 0;
    v.reason = Applicability::no_valid_P;
    return v;
  }
  // E = eps + P^2/2M must stay below both 0 and (when bound) eps1.
  const double ceiling = par.eps1 ? std::min(0.0, *par.eps1) : 0.0;
  v.p_max = std::sqrt(2.0 * par.M * (ceiling - par.eps));
  if (P * P / (2.0 * par.M) + par.eps >= ceiling) {
    v.reason = (par.eps1 && *par.eps1 < 0) ? Applicability::above_impurity_capture
                                           : Applicability::above_dissociation;
    return v;
  }
  v.valid = true;
  v.reason = Applicability::ok;
  return v;
}

double single_atom_reflection(double P, std::optional<double> a1) {
  if (!a1) return 0.0;
  const double x = P * *a1;
  return 1.0 / (1.0 + x * x);
}

double point_dimer_reflection(double P, const PhysicalParams& par) {
  if (!par.a1) return 0.0;
  // A point particle of mass M with the dimer's impurity coupling g1 has
  // effective scattering length -1/(M*g1) = a1*m1/M.
  const double x = P * *par.a1 * par.m1 / par.M;
  return 1.0 / (1.0 + x * x);
}

double dimer_phi(double x, double a) {
  if (!(a > 0)) throw std::domain_error("dimer_phi requires a > 0");
  return std::exp(-std::abs(x) / a) / std::sqrt(a);
}

}  // namespace dimer
