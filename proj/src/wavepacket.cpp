#include "deltadimer/wavepacket.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace dimer {

namespace {

// FFTW plan creation is not thread-safe; execution is.
std::mutex& fftw_mutex() {
  static std::mutex mu;
  return mu;
}

// In-place c2c plans over a caller-owned buffer.  FFTW_MEASURE scribbles on
// the array while planning, so the contents are saved and copied back (the
// buffer address must not change: plans are bound to it).
struct Fft2D {
  fftw_plan fwd = nullptr, bwd = nullptr;

  Fft2D(std::vector<std::complex<double>>& data, std::size_t n0, std::size_t n1) {
    const std::vector<std::complex<double>> keep(data);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    {
      std::scoped_lock lock(fftw_mutex());
      fwd = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1), p, p,
                             FFTW_FORWARD, FFTW_MEASURE);
      bwd = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1), p, p,
                             FFTW_BACKWARD, FFTW_MEASURE);
    }
    std::copy(keep.begin(), keep.end(), data.begin());
  }
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;
  ~Fft2D() {
    std::scoped_lock lock(fftw_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

struct Fft1D {
  fftw_plan fwd = nullptr, bwd = nullptr;

  Fft1D(std::vector<std::complex<double>>& data, std::size_t n) {
    const std::vector<std::complex<double>> keep(data);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    {
      std::scoped_lock lock(fftw_mutex());
      fwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_MEASURE);
      bwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_MEASURE);
    }
    std::copy(keep.begin(), keep.end(), data.begin());
  }
  Fft1D(const Fft1D&) = delete;
  Fft1D& operator=(const Fft1D&) = delete;
  ~Fft1D() {
    std::scoped_lock lock(fftw_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

double signed_freq(std::size_t i, std::size_t n, double dk) {
  const auto ii = static_cast<std::ptrdiff_t>(i);
  const auto nn = static_cast<std::ptrdiff_t>(n);
  return dk * static_cast<double>(ii > nn / 2 ? ii - nn : ii);
}

double max_potential(const PhysicalParams& par, double w) {
  return (std::abs(par.g) + std::abs(par.g1)) * regulated_delta(0.0, w);
}

void check_regulator(double w, double dX, double dr) {
  if (!(w > 0)) throw std::invalid_argument("regulator width must be positive");
  const double lim = 0.25 * w * (1.0 + 1e-12);
  if (dX > lim || dr > lim)
    throw std::invalid_argument("grid spacing must resolve the regulator: dx <= w/4");
}

}  // namespace

double regulated_delta(double x, double w) {
  const double u = x / w;
  return std::exp(-0.5 * u * u) / (w * std::sqrt(2.0 * std::numbers::pi));
}

std::size_t next_fast_size(std::size_t n) {
  for (std::size_t c = std::max<std::size_t>(n, 2);; ++c) {
    std::size_t r = c;
    for (std::size_t f : {2, 3, 5})
      while (r % f == 0) r /= f;
    if (r == 1) return c;
  }
}

std::pair<std::vector<double>, double> relax_ground_state(const PhysicalParams& par, double w,
                                                          double Lr, std::size_t nr) {
  if (!(Lr > 0) || nr < 64) throw std::invalid_argument("relax grid too small");
  const double dr = 2.0 * Lr / static_cast<double>(nr);
  check_regulator(w, dr, dr);

  std::vector<double> V(nr);
  for (std::size_t j = 0; j < nr; ++j) {
    const double r = -Lr + dr * static_cast<double>(j);
    V[j] = par.g * regulated_delta(r, w);
  }
  std::vector<double> kin(nr);
  const double dkr = std::numbers::pi / Lr;
  for (std::size_t j = 0; j < nr; ++j) {
    const double k = signed_freq(j, nr, dkr);
    kin[j] = k * k / (2.0 * par.m);
  }

  std::vector<std::complex<double>> scratch(nr);
  Fft1D fft(scratch, nr);
  const double invn = 1.0 / static_cast<double>(nr);
  const auto apply_H = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t j = 0; j < nr; ++j) scratch[j] = x[j];
    fftw_execute(fft.fwd);
    for (std::size_t j = 0; j < nr; ++j) scratch[j] *= kin[j] * invn;
    fftw_execute(fft.bwd);
    for (std::size_t j = 0; j < nr; ++j) y[j] = scratch[j].real() + V[j] * x[j];
  };

  // Lanczos with full reorthogonalization; the dimer profile seeds it close
  // to the target so convergence is quick despite the wide kinetic spectrum.
  const std::size_t m_max = std::min<std::size_t>(600, nr - 1);
  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;  // beta[j] couples basis[j] to basis[j+1]
  std::vector<double> v(nr), hv(nr);
  for (std::size_t j = 0; j < nr; ++j) {
    const double r = -Lr + dr * static_cast<double>(j);
    v[j] = dimer_phi(r, par.a);
  }
  auto dot = [&](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0;
    for (std::size_t j = 0; j < nr; ++j) s += x[j] * y[j];
    return s;
  };
  {
    const double nv = std::sqrt(dot(v, v));
    for (auto& e : v) e /= nv;
  }
  basis.push_back(v);

  double theta = 0;
  Eigen::VectorXd y;
  bool converged = false;
  for (std::size_t it = 0; it < m_max && !converged; ++it) {
    apply_H(basis[it], hv);
    if (it > 0)
      for (std::size_t j = 0; j < nr; ++j) hv[j] -= beta[it - 1] * basis[it - 1][j];
    alpha.push_back(dot(basis[it], hv));
    for (std::size_t j = 0; j < nr; ++j) hv[j] -= alpha[it] * basis[it][j];
    for (const auto& b : basis) {  // full reorthogonalization
      const double c = dot(b, hv);
      for (std::size_t j = 0; j < nr; ++j) hv[j] -= c * b[j];
    }
    const double bnorm = std::sqrt(dot(hv, hv));
    beta.push_back(bnorm);

    const std::size_t mdim = it + 1;
    const bool basis_exhausted = bnorm < 1e-13;
    if (mdim % 10 == 0 || basis_exhausted || mdim == m_max) {
      Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mdim),
                                                 static_cast<Eigen::Index>(mdim));
      for (std::size_t j = 0; j < mdim; ++j) {
        Tm(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = alpha[j];
        if (j + 1 < mdim) {
          Tm(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j + 1)) = beta[j];
          Tm(static_cast<Eigen::Index>(j + 1), static_cast<Eigen::Index>(j)) = beta[j];
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
      theta = es.eigenvalues()(0);
      y = es.eigenvectors().col(0);
      const double resid = bnorm * std::abs(y(static_cast<Eigen::Index>(mdim - 1)));
      if (resid <= 1e-10 * std::max(1.0, std::abs(theta)) || basis_exhausted) converged = true;
    }
    if (!converged) {
      if (basis_exhausted)
        throw std::runtime_error("relax_ground_state: Krylov basis exhausted early");
      for (std::size_t j = 0; j < nr; ++j) v[j] = hv[j] / bnorm;
      basis.push_back(v);
    }
  }
  if (!converged) throw std::runtime_error("relax_ground_state failed to converge");

  std::vector<double> phi(nr, 0.0);
  for (std::size_t b = 0; b < static_cast<std::size_t>(y.size()); ++b)
    for (std::size_t j = 0; j < nr; ++j) phi[j] += y(static_cast<Eigen::Index>(b)) * basis[b][j];
  double s = 0, sum = 0;
  for (const double e : phi) {
    s += e * e;
    sum += e;
  }
  const double scale = (sum < 0 ? -1.0 : 1.0) / std::sqrt(s * dr);
  for (auto& e : phi) e *= scale;
  return {std::move(phi), theta};
}

Grid2DState prepare_packet(const PhysicalParams& par, double P0, double x0, double sigma,
                           const OracleConfig& cfg) {
  if (!(sigma >= 2.0 * par.a))
    throw std::invalid_argument("packet must be wide against the dimer: sigma >= 2a");
  if (!(x0 <= -4.0 * sigma * (1.0 - 1e-12)))
    throw std::invalid_argument("packet must start well left of the impurity: x0 <= -4 sigma");
  const double sigma_P = 0.5 / sigma;
  if (!(P0 - 3.0 * sigma_P > 0))
    throw std::domain_error("packet momentum window reaches P <= 0");
  if (!applicability(par, P0 + 3.0 * sigma_P).valid)
    throw std::domain_error("packet momentum window leaves the elastic range");

  Grid2DState st;
  st.w = cfg.w > 0 ? cfg.w : par.a / 20.0;
  st.P0 = P0;
  st.sigma = sigma;
  st.x0 = x0;
  st.absorbers = cfg.absorbers;
  st.absorber_width = cfg.absorber_width > 0 ? cfg.absorber_width : 10.0 * par.a;
  st.absorber_strength = cfg.absorber_strength > 0 ? cfg.absorber_strength : 0.5;

  const double dx_target = cfg.dx > 0 ? cfg.dx : st.w / 4.0;
  st.Lr = cfg.Lr > 0 ? cfg.Lr : std::max(12.0 * par.a, 40.0 * st.w);
  st.LX = cfg.LX > 0 ? cfg.LX
                     : std::abs(x0) + 8.0 * sigma + (cfg.absorbers ? st.absorber_width : 0.0);
  st.nX = next_fast_size(static_cast<std::size_t>(std::ceil(2.0 * st.LX / dx_target)));
  st.nr = next_fast_size(static_cast<std::size_t>(std::ceil(2.0 * st.Lr / dx_target)));
  st.dX = 2.0 * st.LX / static_cast<double>(st.nX);
  st.dr = 2.0 * st.Lr / static_cast<double>(st.nr);
  check_regulator(st.w, st.dX, st.dr);
  if (st.absorbers) {
    const double x_abs = st.LX - st.absorber_width;
    if (!(std::abs(x0) + 3.0 * sigma <= x_abs))
      throw std::invalid_argument("packet overlaps the absorber ramp at t = 0");
  }

  auto [phi, eps_w] = relax_ground_state(par, st.w, st.Lr, st.nr);
  st.eps_w = eps_w;

  st.psi.assign(st.nX * st.nr, {0.0, 0.0});
  for (std::size_t iX = 0; iX < st.nX; ++iX) {
    const double X = -st.LX + st.dX * static_cast<double>(iX);
    const double env = std::exp(-(X - x0) * (X - x0) / (4.0 * sigma * sigma));
    const std::complex<double> cX = env * std::polar(1.0, P0 * X);
    std::complex<double>* row = &st.psi[iX * st.nr];
    for (std::size_t ir = 0; ir < st.nr; ++ir) row[ir] = cX * phi[ir];
  }
  double s = 0;
  for (const auto& z : st.psi) s += std::norm(z);
  s *= st.dX * st.dr;
  const double rescale = 1.0 / std::sqrt(s);
  for (auto& z : st.psi) z *= rescale;
  st.norm = 1.0;
  st.E0 = total_energy(st, par);
  return st;
}

void propagate(Grid2DState& st, const PhysicalParams& par, double w, double dt,
               std::size_t steps) {
  if (steps == 0) return;
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  check_regulator(w, st.dX, st.dr);
  if (dt * max_potential(par, w) > 0.15 * (1.0 + 1e-9))
    throw std::invalid_argument("dt too large for the potential phase budget dt*max|V| <= 0.15");
  st.w = w;

  const std::size_t nX = st.nX, nr = st.nr;
  const double beta = par.m2 / par.M;

  // Half-step potential phase; both contact terms are diagonal in position.
  std::vector<std::complex<double>> phaseV(nX * nr);
  for (std::size_t iX = 0; iX < nX; ++iX) {
    const double X = -st.LX + st.dX * static_cast<double>(iX);
    for (std::size_t ir = 0; ir < nr; ++ir) {
      const double r = -st.Lr + st.dr * static_cast<double>(ir);
      double V = par.g * regulated_delta(r, w);
      if (par.a1) V += par.g1 * regulated_delta(X + beta * r, w);
      phaseV[iX * nr + ir] = std::polar(1.0, -0.5 * V * dt);
    }
  }
  // Exact kinetic phases; the forward+backward FFT normalization is folded
  // into the X factor.
  std::vector<std::complex<double>> phKX(nX), phKr(nr);
  const double invN = 1.0 / static_cast<double>(nX * nr);
  for (std::size_t i = 0; i < nX; ++i) {
    const double k = signed_freq(i, nX, std::numbers::pi / st.LX);
    phKX[i] = std::polar(invN, -k * k / (2.0 * par.M) * dt);
  }
  for (std::size_t j = 0; j < nr; ++j) {
    const double k = signed_freq(j, nr, std::numbers::pi / st.Lr);
    phKr[j] = std::polar(1.0, -k * k / (2.0 * par.m) * dt);
  }
  // Absorber mask on the X edges.
  std::vector<double> mask;
  std::size_t n_ramp = 0;
  if (st.absorbers) {
    const double x_abs = st.LX - st.absorber_width;
    if (!(x_abs > 0)) throw std::invalid_argument("absorber ramp swallows the whole box");
    mask.assign(nX, 1.0);
    for (std::size_t i = 0; i < nX; ++i) {
      const double X = -st.LX + st.dX * static_cast<double>(i);
      const double over = std::abs(X) - x_abs;
      if (over > 0) {
        const double s = std::sin(0.5 * std::numbers::pi * over / st.absorber_width);
        mask[i] = std::exp(-st.absorber_strength * s * s * dt);
      }
    }
    n_ramp = static_cast<std::size_t>(std::ceil(st.absorber_width / st.dX)) + 1;
  }

  const bool check_conservation = !st.absorbers;
  const double E_before = check_conservation ? total_energy(st, par) : 0.0;
  const double norm_before = st.norm;

  Fft2D fft(st.psi, nX, nr);
  const double cell = st.dX * st.dr;
  for (std::size_t step = 0; step < steps; ++step) {
    for (std::size_t i = 0; i < nX * nr; ++i) st.psi[i] *= phaseV[i];
    fftw_execute(fft.fwd);
    for (std::size_t iX = 0; iX < nX; ++iX) {
      const std::complex<double> cX = phKX[iX];
      std::complex<double>* row = &st.psi[iX * nr];
      for (std::size_t ir = 0; ir < nr; ++ir) row[ir] *= cX * phKr[ir];
    }
    fftw_execute(fft.bwd);
    for (std::size_t i = 0; i < nX * nr; ++i) st.psi[i] *= phaseV[i];
    if (st.absorbers) {
      double eaten_l = 0, eaten_r = 0;
      const auto eat = [&](std::size_t i, double& side) {
        const double mu = mask[i];
        if (mu == 1.0) return;
        const double loss = 1.0 - mu * mu;
        std::complex<double>* row = &st.psi[i * nr];
        double acc = 0;
        for (std::size_t ir = 0; ir < nr; ++ir) {
          acc += std::norm(row[ir]);
          row[ir] *= mu;
        }
        side += acc * loss;
      };
      for (std::size_t i = 0; i < std::min(n_ramp, nX); ++i) eat(i, eaten_l);
      for (std::size_t i = nX - std::min(n_ramp, nX); i < nX; ++i) eat(i, eaten_r);
      st.absorbed_left += eaten_l * cell;
      st.absorbed_right += eaten_r * cell;
    }
  }
  st.t += dt * static_cast<double>(steps);
  double s = 0;
  for (const auto& z : st.psi) s += std::norm(z);
  st.norm = s * cell;

  if (check_conservation) {
    if (std::abs(st.norm - norm_before) > 1e-6)
      throw std::runtime_error("propagate: norm drifted by more than 1e-6");
    const double E_after = total_energy(st, par);
    if (std::abs(E_after - E_before) > 1e-4 * std::max(std::abs(E_before), 0.1))
      throw std::runtime_error("propagate: <H> drifted by more than 1e-4 relative");
  }
}

double total_energy(const Grid2DState& st, const PhysicalParams& par) {
  const std::size_t nX = st.nX, nr = st.nr;
  std::vector<std::complex<double>> scratch(st.psi);
  Fft2D fft(scratch, nX, nr);
  fftw_execute(fft.fwd);
  const double invN = 1.0 / static_cast<double>(nX * nr);
  double Tsum = 0;
  for (std::size_t iX = 0; iX < nX; ++iX) {
    const double kX = signed_freq(iX, nX, std::numbers::pi / st.LX);
    const double tX = kX * kX / (2.0 * par.M);
    const std::complex<double>* row = &scratch[iX * nr];
    for (std::size_t ir = 0; ir < nr; ++ir) {
      const double kr = signed_freq(ir, nr, std::numbers::pi / st.Lr);
      Tsum += std::norm(row[ir]) * (tX + kr * kr / (2.0 * par.m));
    }
  }
  Tsum *= invN;

  const double beta = par.m2 / par.M;
  double Vsum = 0, nsum = 0;
  for (std::size_t iX = 0; iX < nX; ++iX) {
    const double X = -st.LX + st.dX * static_cast<double>(iX);
    const std::complex<double>* row = &st.psi[iX * nr];
    for (std::size_t ir = 0; ir < nr; ++ir) {
      const double r = -st.Lr + st.dr * static_cast<double>(ir);
      double V = par.g * regulated_delta(r, st.w);
      if (par.a1) V += par.g1 * regulated_delta(X + beta * r, st.w);
      const double dens = std::norm(row[ir]);
      Vsum += dens * V;
      nsum += dens;
    }
  }
  if (!(nsum > 0)) throw std::runtime_error("total_energy of an empty state");
  return (Tsum + Vsum) / nsum;
}

std::vector<double> x_marginal(const Grid2DState& st) {
  std::vector<double> rho(st.nX, 0.0);
  for (std::size_t iX = 0; iX < st.nX; ++iX) {
    const std::complex<double>* row = &st.psi[iX * st.nr];
    double acc = 0;
    for (std::size_t ir = 0; ir < st.nr; ++ir) acc += std::norm(row[ir]);
    rho[iX] = acc * st.dr;
  }
  return rho;
}

namespace {

double measurement_zone(const Grid2DState& st, const PhysicalParams& par) {
  double z = std::max(par.a, st.w);
  if (par.a1) z = std::max(z, std::abs(*par.a1));
  z *= 10.0;
  if (!(z < st.LX)) throw std::domain_error("measurement window exceeds the box");
  return z;
}

}  // namespace

double separation_residual(const Grid2DState& st, const PhysicalParams& par) {
  const double z = measurement_zone(st, par);
  const auto rho = x_marginal(st);
  double trapped = 0;
  for (std::size_t i = 0; i < st.nX; ++i) {
    const double X = -st.LX + st.dX * static_cast<double>(i);
    if (std::abs(X) < z) trapped += rho[i];
  }
  return trapped * st.dX;
}

RTMeasure measure_RT(const Grid2DState& st, const PhysicalParams& par) {
  const double z = measurement_zone(st, par);
  const auto rho = x_marginal(st);
  double left = 0, right = 0, trapped = 0;
  for (std::size_t i = 0; i < st.nX; ++i) {
    const double X = -st.LX + st.dX * static_cast<double>(i);
    (X <= -z ? left : X >= z ? right : trapped) += rho[i];
  }
  RTMeasure m;
  m.trapped = trapped * st.dX;
  m.R = left * st.dX + st.absorbed_left;
  m.T = right * st.dX + st.absorbed_right;
  m.norm_drift = std::abs(st.norm + st.absorbed_left + st.absorbed_right - 1.0);
  if (m.trapped >= 1e-4)
    throw std::domain_error("insufficient separation: propagate longer before measuring");
  if (m.norm_drift > 1e-6)
    throw std::runtime_error("probability ledger broken: norm plus absorbed mass drifted");
  return m;
}

std::pair<double, double> packet_center(const Grid2DState& st) {
  const auto rho = x_marginal(st);
  double nsum = 0, xsum = 0;
  for (std::size_t i = 0; i < st.nX; ++i) {
    const double X = -st.LX + st.dX * static_cast<double>(i);
    nsum += rho[i];
    xsum += X * rho[i];
  }
  // <P_X> by periodic central differences; second-order errors are far below
  // the tolerances this diagnostic serves.
  double psum = 0;
  for (std::size_t iX = 0; iX < st.nX; ++iX) {
    const std::size_t up = (iX + 1) % st.nX;
    const std::size_t dn = (iX + st.nX - 1) % st.nX;
    const std::complex<double>* rup = &st.psi[up * st.nr];
    const std::complex<double>* rdn = &st.psi[dn * st.nr];
    const std::complex<double>* row = &st.psi[iX * st.nr];
    for (std::size_t ir = 0; ir < st.nr; ++ir)
      psum += std::imag(std::conj(row[ir]) * (rup[ir] - rdn[ir]));
  }
  psum /= 2.0 * st.dX;
  // rho already carries dr, so dX cancels in <X>; for <P_X> one dX from the
  // measure cancels against the marginal's missing one.
  return {xsum / nsum, psum * st.dr / nsum};
}

}  // namespace dimer
