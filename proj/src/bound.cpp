#include "deltadimer/bound.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dimer {

namespace {

void check_bound_domain(double E, const PhysicalParams& par) {
  if (par.a1 && *par.a1 < 0)
    throw std::domain_error("bound channel requires an attractive impurity (a1 > 0 or off)");
  double ceiling = std::min(par.eps, 0.0);
  if (par.eps1) ceiling = std::min(ceiling, *par.eps1);
  if (!(E < ceiling)) throw std::domain_error("bound_eigenvalue requires E below both thresholds");
}

// Symmetrized kernel operator: similar to diag(t_i/pi) K diag(w_j) under
// S = diag(sqrt(w_i/|t_i|)), with t_i = t(E - p_i^2/(2M)) < 0 below the
// dimer pole.  Its spectrum equals the operator's.
Eigen::MatrixXd symmetrized_operator(double E, const KernelMatrix& K,
                                     const PhysicalParams& par, const MomentumGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.n);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = grid.nodes[static_cast<std::size_t>(i)];
    const double t = t_matrix(E - p * p / (2.0 * par.M), par.m, par.a);
    d(i) = std::sqrt(-t * grid.weights[static_cast<std::size_t>(i)]);
  }
  return (-1.0 / std::numbers::pi) * d.asDiagonal() * K.entries * d.asDiagonal();
}

double lambda_max_of(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

double bound_eigenvalue(double E, Parity parity, const PhysicalParams& par,
                        const MomentumGrid& grid, std::size_t quad_n) {
  check_bound_domain(E, par);
  if (!par.a1) return 0.0;
  const KernelMatrix K = kernel_matrix(grid, E, par, parity, quad_n);
  return lambda_max_of(symmetrized_operator(E, K, par, grid));
}

std::optional<BoundStateResult> solve_bound_state(const PhysicalParams& par, Parity parity,
                                                  const BoundOptions& opt) {
  if (!par.a1) return std::nullopt;  // lambda_max is identically zero
  if (*par.a1 < 0)
    throw std::domain_error("bound channel requires an attractive impurity (a1 > 0 or off)");

  const double thresh = std::min(par.eps, *par.eps1);
  const double E_hi = opt.E_hi.value_or(thresh * (1.0 + 1e-9));
  const double E_lo = opt.E_lo.value_or(10.0 * thresh);
  if (!(E_hi <= thresh * (1.0 + 1e-9)))
    throw std::invalid_argument("bound window ceiling must sit below both thresholds");
  if (!(E_lo < E_hi)) throw std::invalid_argument("bound window is empty");

  const double scale = opt.scale > 0 ? opt.scale : std::max(par.a, *par.a1);
  MomentumGrid grid = build_grid(opt.grid_n, scale);

  const auto lambda_at = [&](double E) {
    return bound_eigenvalue(E, parity, par, grid, opt.quad_n);
  };

  // Logarithmic ladder from the shallow end down; lambda_max decreases with
  // depth, so the first sign change of (lambda - 1) brackets the root.
  constexpr int kScan = 20;
  const double ratio = E_lo / E_hi;  // > 1, both negative
  double E_a = 0, E_b = 0, f_a = 0, f_b = 0;
  bool bracketed = false;
  double E_prev = 0, f_prev = 0;
  for (int k = 0; k < kScan; ++k) {
    const double E = E_hi * std::pow(ratio, static_cast<double>(k) / (kScan - 1));
    const double f = lambda_at(E) - 1.0;
    if (k > 0 && ((f_prev > 0) != (f > 0))) {
      E_a = E;       // deeper end, lambda < 1
      f_a = f;
      E_b = E_prev;  // shallower end, lambda > 1
      f_b = f_prev;
      bracketed = true;
      break;  // lambda_max is monotone in depth: one crossing at most
    }
    E_prev = E;
    f_prev = f;
  }
  if (!bracketed) {
    if (f_prev > 0)
      throw std::runtime_error("bound search window too shallow: lambda_max > 1 everywhere");
    return std::nullopt;  // lambda_max < 1 throughout: no state in the window
  }

  // Illinois-damped false position within the bracket.  lambda blows up at
  // the shallow end (threshold spike), so an undamped secant would creep from
  // the deep end in vanishing steps; halving the retained end's weight keeps
  // the interpolant balanced.
  double E_root = 0.5 * (E_a + E_b), f_root = lambda_at(E_root) - 1.0;
  int iters = 0, side = 0;
  while (std::abs(f_root) > 1e-10) {
    if (++iters > 200) throw std::runtime_error("bound-state root polish failed to converge");
    if (f_root > 0) {
      E_b = E_root;
      f_b = f_root;
      if (side == +1) f_a *= 0.5;
      side = +1;
    } else {
      E_a = E_root;
      f_a = f_root;
      if (side == -1) f_b *= 0.5;
      side = -1;
    }
    double E_next = (E_a * f_b - E_b * f_a) / (f_b - f_a);
    const double lo = std::min(E_a, E_b), hi = std::max(E_a, E_b);
    if (!(E_next > lo) || !(E_next < hi)) E_next = 0.5 * (E_a + E_b);
    E_root = E_next;
    f_root = lambda_at(E_root) - 1.0;
  }

  // Eigenvector at the root, undoing the similarity scaling.
  const KernelMatrix K = kernel_matrix(grid, E_root, par, parity, opt.quad_n);
  const Eigen::MatrixXd sym = symmetrized_operator(E_root, K, par, grid);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const auto n = static_cast<Eigen::Index>(grid.n);
  Eigen::VectorXd v = es.eigenvectors().col(n - 1);
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = grid.nodes[static_cast<std::size_t>(i)];
    const double t = t_matrix(E_root - p * p / (2.0 * par.M), par.m, par.a);
    c(i) = v(i) * std::sqrt(-t / grid.weights[static_cast<std::size_t>(i)]);
  }
  Eigen::Index peak = 0;
  c.cwiseAbs().maxCoeff(&peak);
  c /= c(peak);

  BoundStateResult res;
  res.energy = E_root;
  res.parity = parity;
  res.c = std::move(c);
  res.grid = std::move(grid);
  res.lambda_residual = std::abs(f_root);
  return res;
}

Eigen::VectorXd recover_c1(const Eigen::VectorXd& c, double E, const PhysicalParams& par,
                           const MomentumGrid& grid, Parity parity) {
  if (static_cast<std::size_t>(c.size()) != grid.n)
    throw std::invalid_argument("recover_c1 sample size mismatch");
  const auto n = static_cast<Eigen::Index>(grid.n);
  Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n);
  if (!par.a1) return c1;
  check_bound_domain(E, par);

  const double inv2m1 = 0.5 / par.m1;
  const double inv2m2 = 0.5 / par.m2;
  const double sign = parity == Parity::even ? 1.0 : -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double k = grid.nodes[static_cast<std::size_t>(i)];
    const double kk = k * k * inv2m2 - E;
    double acc = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = grid.nodes[static_cast<std::size_t>(j)];
      const double d_plus = (s - k) * (s - k) * inv2m1 + kk;
      const double d_minus = (s + k) * (s + k) * inv2m1 + kk;
      acc += grid.weights[static_cast<std::size_t>(j)] * c(j) *
             (1.0 / d_plus + sign / d_minus);
    }
    c1(i) = -t_matrix(E - k * k * inv2m2, par.m1, par.a1) * acc /
            (2.0 * std::numbers::pi);
  }
  return c1;
}

double interp_even(const MomentumGrid& grid, const Eigen::VectorXd& values, double x) {
  if (static_cast<std::size_t>(values.size()) != grid.n)
    throw std::invalid_argument("interp_even sample size mismatch");
  const double ax = std::abs(x);
  const auto& nd = grid.nodes;
  const std::size_t n = grid.n;
  if (ax > nd[n - 1]) throw std::domain_error("interpolation beyond the last grid node");

  // 4-point stencil around ax; indices below 0 mirror to the even extension.
  const auto it = std::lower_bound(nd.begin(), nd.end(), ax);
  const auto hi = static_cast<std::ptrdiff_t>(it - nd.begin());
  double xs[4], ys[4];
  for (int q = 0; q < 4; ++q) {
    std::ptrdiff_t idx = hi - 2 + q;
    if (idx < 0) {
      xs[q] = -nd[static_cast<std::size_t>(-idx - 1)];
      ys[q] = values(static_cast<Eigen::Index>(-idx - 1));
    } else {
      idx = std::min<std::ptrdiff_t>(idx, static_cast<std::ptrdiff_t>(n) - 1);
      xs[q] = nd[static_cast<std::size_t>(idx)];
      ys[q] = values(static_cast<Eigen::Index>(idx));
    }
  }
  // Guard against duplicate stencil points at the top edge.
  if (hi >= static_cast<std::ptrdiff_t>(n) - 1) {
    for (int q = 0; q < 4; ++q) {
      const auto base = static_cast<std::ptrdiff_t>(n) - 4 + q;
      xs[q] = nd[static_cast<std::size_t>(base)];
      ys[q] = values(static_cast<Eigen::Index>(base));
    }
  }
  double acc = 0;
  for (int q = 0; q < 4; ++q) {
    double term = ys[q];
    for (int r = 0; r < 4; ++r)
      if (r != q) term *= (ax - xs[r]) / (xs[q] - xs[r]);
    acc += term;
  }
  return acc;
}

double coefficient_C(double p1, double p2, const Eigen::VectorXd& c,
                     const Eigen::VectorXd& c1, double E, const PhysicalParams& par,
                     const MomentumGrid& grid) {
  check_bound_domain(E, par);
  const double num = interp_even(grid, c, p1 + p2) + interp_even(grid, c1, p2);
  const double den = E - p1 * p1 / (2.0 * par.m1) - p2 * p2 / (2.0 * par.m2);
  return num / den;  // |den| >= |E| since E < 0
}

}  // namespace dimer
