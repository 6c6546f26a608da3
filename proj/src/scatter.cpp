#include "deltadimer/scatter.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <utility>

namespace dimer {

namespace {

void check_incident(const PhysicalParams& par, double P) {
  if (!(P > 0)) throw std::domain_error("incident momentum must be positive");
  const auto verdict = applicability(par, P);
  if (!verdict.valid) {
    switch (verdict.reason) {
      case Applicability::no_valid_P:
        throw std::domain_error("no elastic window: impurity capture lies below the dimer");
      case Applicability::above_impurity_capture:
        throw std::domain_error("incident momentum opens the atom-1 capture channel");
      default:
        throw std::domain_error("incident momentum above the dissociation threshold");
    }
  }
  if (P >= verdict.p_max * (1.0 - kThresholdRelMargin))
    throw std::domain_error("incident momentum too close to the dissociation threshold");
}

}  // namespace

Eigen::VectorXcd solve_offshell(const PhysicalParams& par, double P, const KernelMatrix& K,
                                double* rcond) {
  check_incident(par, P);
  const MomentumGrid& grid = *K.grid;
  if (!grid.onshell_index || grid.nodes[*grid.onshell_index] != P)
    throw std::invalid_argument("solve_offshell grid must carry P as its on-shell node");
  const auto n = static_cast<Eigen::Index>(grid.n);
  const auto j0 = static_cast<Eigen::Index>(*grid.onshell_index);

  // Principal-value weights: the on-shell slot absorbs the pole subtraction
  // and the half-residue (see pv_integrate).
  Eigen::VectorXcd W(n);
  const double P2 = P * P;
  double sub = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == j0) continue;
    const double s = grid.nodes[static_cast<std::size_t>(j)];
    const double wj = grid.weights[static_cast<std::size_t>(j)] / (s * s - P2);
    W(j) = wj;
    sub += wj;
  }
  W(j0) = std::complex<double>(-sub, std::numbers::pi / (2.0 * P));

  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i)
    h(i) = h_factor(grid.nodes[static_cast<std::size_t>(i)], P, par);

  const double invpi = 1.0 / std::numbers::pi;
  Eigen::MatrixXcd A(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::complex<double> wj = invpi * W(j);
    for (Eigen::Index i = 0; i < n; ++i) A(i, j) = -h(i) * K.entries(i, j) * wj;
    A(j, j) += 1.0;
  }
  const Eigen::VectorXcd b =
      (h.array() * K.entries.col(j0).array()).matrix().cast<std::complex<double>>();

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  const Eigen::VectorXcd f = lu.solve(b);
  if (rcond) *rcond = lu.rcond();

  const double bnorm = b.lpNorm<Eigen::Infinity>();
  const double resid = (A * f - b).lpNorm<Eigen::Infinity>() / (bnorm > 0 ? bnorm : 1.0);
  if (!(resid <= 1e-10))
    throw std::runtime_error("scattering linear solve residual above 1e-10");
  return f;
}

Eigen::VectorXcd solve_offshell(const PhysicalParams& par, double P, Parity parity,
                                const MomentumGrid& grid, std::size_t quad_n) {
  check_incident(par, P);
  const double E = par.eps + P * P / (2.0 * par.M);
  const KernelMatrix K = kernel_matrix(grid, E, par, parity, quad_n);
  return solve_offshell(par, P, K);
}

RTResult reflection_transmission(double P, std::complex<double> f_plus,
                                 std::complex<double> f_minus) {
  if (!(P > 0)) throw std::domain_error("incident momentum must be positive");
  RTResult rt;
  rt.r_amp = f_minus / (2.0 * P);
  rt.t_amp = 1.0 + std::complex<double>(0.0, 1.0) * f_plus / (2.0 * P);
  rt.R = std::norm(rt.r_amp);
  rt.T = std::norm(rt.t_amp);
  return rt;
}

ScatteringResult solve_scattering(const PhysicalParams& par, double P, std::size_t grid_n,
                                  std::size_t quad_n, double scale) {
  check_incident(par, P);
  ScatteringResult res;
  res.P = P;
  res.E = par.eps + P * P / (2.0 * par.M);
  const double sc =
      scale > 0 ? scale : std::max(par.a, par.a1 ? std::abs(*par.a1) : 0.0);
  res.grid = build_grid(grid_n, sc, P);

  const auto [K_even, K_odd] = kernel_matrix_pair(res.grid, res.E, par, quad_n);
  double rc_even = 0, rc_odd = 0;
  res.f_even = solve_offshell(par, P, K_even, &rc_even);
  res.f_odd = solve_offshell(par, P, K_odd, &rc_odd);
  res.rcond = std::min(rc_even, rc_odd);

  const auto j0 = static_cast<Eigen::Index>(*res.grid.onshell_index);
  res.f_even_onshell = res.f_even(j0);
  res.f_odd_onshell = res.f_odd(j0);
  res.f_plus = res.f_even_onshell + res.f_odd_onshell;
  res.f_minus = res.f_even_onshell - res.f_odd_onshell;
  const RTResult rt = reflection_transmission(P, res.f_plus, res.f_minus);
  res.r_amp = rt.r_amp;
  res.t_amp = rt.t_amp;
  res.R = rt.R;
  res.T = rt.T;
  res.unitarity_defect = std::abs(res.R + res.T - 1.0);
  return res;
}

std::vector<SweepRow> sweep(const PhysicalParams& base, SweepAxis axis,
                            std::span<const double> values, double fixed_P,
                            const SweepOptions& opt) {
  std::vector<SweepRow> rows(values.size());
  const auto nan = std::numeric_limits<double>::quiet_NaN();

  const auto run_point = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.value = values[i];
    try {
      PhysicalParams par = base;
      double P = 0;
      if (axis == SweepAxis::P) {
        P = values[i];
      } else {
        par = new_params(base.m1, base.m2, base.a, values[i] * base.a);
        P = fixed_P;
      }
      const ScatteringResult sr =
          solve_scattering(par, P, opt.grid_n, opt.quad_n, opt.scale);
      row.R = sr.R;
      row.T = sr.T;
      row.f_even_onshell = sr.f_even_onshell;
      row.f_odd_onshell = sr.f_odd_onshell;
      row.unitarity_defect = sr.unitarity_defect;
    } catch (const std::domain_error&) {
      row.R = row.T = row.unitarity_defect = nan;
      row.f_even_onshell = row.f_odd_onshell = {nan, nan};
      row.shaded = true;
    } catch (const std::invalid_argument&) {
      row.R = row.T = row.unitarity_defect = nan;
      row.f_even_onshell = row.f_odd_onshell = {nan, nan};
      row.shaded = true;
    }
  };

  const unsigned jobs = std::max(1u, opt.jobs);
  if (jobs == 1 || values.size() <= 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run_point(i);
    return rows;
  }
  // Static interleaved partition: deterministic output independent of timing.
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < values.size(); i += jobs) run_point(i);
    });
  }
  for (auto& th : pool) th.join();
  return rows;
}

}  // namespace dimer
