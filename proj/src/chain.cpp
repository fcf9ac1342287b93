#include "twz/chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "twz/constants.hpp"
#include "twz/errors.hpp"

namespace twz::chain {

namespace c = twz::constants;

int ChainConfig::n_tweezed() const {
  int k = 0;
  for (int f : tweezer_flags) k += (f != 0);
  return k;
}

void ChainConfig::validate() const {
  if (n_ions < 1) throw std::invalid_argument("chain: n_ions must be >= 1");
  if (!(ion_mass > 0.0)) throw std::invalid_argument("chain: ion_mass must be positive");
  if (!(axial_freq > 0.0)) throw std::invalid_argument("chain: axial_freq must be positive");
  if (tweezer_flags.size() != static_cast<size_t>(n_ions))
    throw std::invalid_argument("chain: tweezer_flags size must equal n_ions");
  if (!qubit_offsets.empty() && qubit_offsets.size() != static_cast<size_t>(n_ions))
    throw std::invalid_argument("chain: qubit_offsets size must equal n_ions");
  if (light_shift < 0.0) throw std::domain_error("chain: light_shift must be >= 0");
  if (n_tweezed() > 0 && !(beam_waist > 0.0))
    throw std::invalid_argument("chain: beam_waist must be positive when ions are tweezed");
}

double length_scale(double axial_freq, double ion_mass) {
  if (!(axial_freq > 0.0) || !(ion_mass > 0.0))
    throw std::domain_error("length_scale: inputs must be positive");
  double coulomb = c::elementary_charge * c::elementary_charge /
                   (4.0 * c::pi * c::vacuum_permittivity);
  return std::cbrt(coulomb / (ion_mass * axial_freq * axial_freq));
}

Eigen::VectorXd potential_gradient(const Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  Eigen::VectorXd g = u;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = u(i) - u(j);
      g(i) -= (d > 0.0 ? 1.0 : -1.0) / (d * d);
    }
  }
  return g;
}

namespace {

// Coulomb Hessian of the dimensionless potential (no tweezer terms).
Eigen::MatrixXd coulomb_hessian(const Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 1.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = std::abs(u(i) - u(j));
      double inv3 = 1.0 / (d * d * d);
      diag += 2.0 * inv3;
      h(i, j) = -2.0 * inv3;
    }
    h(i, i) = diag;
  }
  return h;
}

} // namespace

Eigen::VectorXd equilibrium_positions(int n_ions) {
  if (n_ions < 1) throw std::invalid_argument("equilibrium_positions: n_ions must be >= 1");
  if (n_ions == 1) return Eigen::VectorXd::Zero(1);

  // Uniformly spaced start; half-width follows the empirical 0.48 N^0.56
  // chain-extent scaling so Newton starts near the basin.
  const int n = n_ions;
  double half_width = 0.5 * n * 0.48 * std::pow(n, 0.56);
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i)
    u(i) = -half_width + 2.0 * half_width * i / (n - 1);

  const double tol = 1e-12;
  const int max_iter = 200;
  Eigen::VectorXd g = potential_gradient(u);
  for (int iter = 0; iter < max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= tol) return u;
    Eigen::MatrixXd h = coulomb_hessian(u);
    Eigen::VectorXd step = h.ldlt().solve(-g);
    // Damping: halve until the residual decreases and ordering is kept.
    double g0 = g.norm();
    double s = 1.0;
    for (int k = 0; k < 40; ++k, s *= 0.5) {
      Eigen::VectorXd trial = u + s * step;
      bool ordered = true;
      for (int i = 0; i + 1 < n; ++i)
        if (!(trial(i) < trial(i + 1))) { ordered = false; break; }
      if (!ordered) continue;
      Eigen::VectorXd gt = potential_gradient(trial);
      if (gt.norm() < g0) {
        u = trial;
        g = gt;
        break;
      }
      if (k == 39) throw NumericError("equilibrium_positions: line search failed");
    }
  }
  if (potential_gradient(u).lpNorm<Eigen::Infinity>() <= tol) return u;
  throw NumericError("equilibrium_positions: Newton did not converge, residual " +
                     std::to_string(potential_gradient(u).lpNorm<Eigen::Infinity>()));
}

double optical_confinement(double light_shift, double beam_waist, double ion_mass) {
  if (light_shift < 0.0) throw std::domain_error("optical_confinement: light_shift must be >= 0");
  if (!(beam_waist > 0.0) || !(ion_mass > 0.0))
    throw std::domain_error("optical_confinement: waist and mass must be positive");
  return 2.0 * std::sqrt(c::hbar * light_shift / (ion_mass * beam_waist * beam_waist));
}

Eigen::MatrixXd secular_matrix(const Eigen::VectorXd& equilibria,
                               const std::vector<int>& tweezer_flags,
                               double omega_op, double axial_freq) {
  const int n = static_cast<int>(equilibria.size());
  if (tweezer_flags.size() != static_cast<size_t>(n))
    throw std::invalid_argument("secular_matrix: flags size mismatch");
  if (!(axial_freq > 0.0)) throw std::domain_error("secular_matrix: axial_freq must be positive");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (equilibria(i) == equilibria(j))
        throw std::domain_error("secular_matrix: coincident ion positions");

  Eigen::MatrixXd a = coulomb_hessian(equilibria);
  double pin = (omega_op / axial_freq) * (omega_op / axial_freq);
  for (int i = 0; i < n; ++i)
    if (tweezer_flags[i]) a(i, i) += pin;
  return a;
}

Eigen::MatrixXd lamb_dicke(const Eigen::MatrixXd& mode_matrix,
                           const Eigen::VectorXd& frequencies,
                           double drive_wavelength, double axis_projection,
                           double ion_mass) {
  if (!(drive_wavelength > 0.0) || !(ion_mass > 0.0))
    throw std::domain_error("lamb_dicke: wavelength and mass must be positive");
  const int n_modes = static_cast<int>(mode_matrix.rows());
  Eigen::MatrixXd eta(n_modes, mode_matrix.cols());
  double k_wave = c::two_pi / drive_wavelength;
  for (int m = 0; m < n_modes; ++m) {
    double z0 = std::sqrt(c::hbar / (2.0 * ion_mass * frequencies(m)));
    eta.row(m) = mode_matrix.row(m) * (k_wave * axis_projection * z0);
  }
  return eta;
}

namespace {

// Solve the secular problem for one tweezer participation pattern.
// Returns ascending frequencies and sign-fixed orthonormal mode rows.
void solve_modes(const Eigen::VectorXd& u, const std::vector<int>& flags,
                 double omega_op, double axial_freq,
                 Eigen::VectorXd& freqs, Eigen::MatrixXd& vectors) {
  Eigen::MatrixXd a = secular_matrix(u, flags, omega_op, axial_freq);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw NumericError("mode_spectrum: eigensolver failed");
  Eigen::VectorXd lambda = es.eigenvalues();
  const int n = static_cast<int>(u.size());
  if (lambda(0) <= 0.0)
    throw NumericError("mode_spectrum: non-positive eigenvalue, unstable configuration");
  freqs.resize(n);
  vectors.resize(n, n);
  for (int m = 0; m < n; ++m) {
    freqs(m) = axial_freq * std::sqrt(lambda(m));
    Eigen::VectorXd v = es.eigenvectors().col(m);
    // Deterministic sign: first component of non-negligible magnitude positive.
    for (int i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    vectors.row(m) = v.transpose();
  }
}

} // namespace

ModeSpectrum mode_spectrum(const ChainConfig& config, double drive_wavelength,
                           double axis_projection) {
  config.validate();
  ModeSpectrum s;
  s.equilibria = equilibrium_positions(config.n_ions);
  s.length_scale = length_scale(config.axial_freq, config.ion_mass);
  double w_op = config.n_tweezed() > 0
                    ? optical_confinement(config.light_shift, config.beam_waist,
                                          config.ion_mass)
                    : 0.0;
  solve_modes(s.equilibria, config.tweezer_flags, w_op, config.axial_freq,
              s.frequencies, s.mode_matrix);
  s.lamb_dicke = lamb_dicke(s.mode_matrix, s.frequencies, drive_wavelength,
                            axis_projection, config.ion_mass);
  return s;
}

ConditionalSpectrum conditional_spectrum(const ChainConfig& config, int gate_mode,
                                         int max_subsets, Execution exec) {
  config.validate();
  if (gate_mode < 0 || gate_mode >= config.n_ions)
    throw std::invalid_argument("conditional_spectrum: gate_mode out of range");

  std::vector<int> tweezed_ions;
  for (int i = 0; i < config.n_ions; ++i)
    if (config.tweezer_flags[i]) tweezed_ions.push_back(i);
  const int nt = static_cast<int>(tweezed_ions.size());

  Eigen::VectorXd u = equilibrium_positions(config.n_ions);
  double w_op = nt > 0 ? optical_confinement(config.light_shift, config.beam_waist,
                                             config.ion_mass)
                       : 0.0;

  auto freq_for = [&](const std::vector<int>& flags) {
    Eigen::VectorXd f;
    Eigen::MatrixXd v;
    solve_modes(u, flags, w_op, config.axial_freq, f, v);
    return f(gate_mode);
  };

  ConditionalSpectrum out;
  out.gate_mode = gate_mode;
  out.freqs.resize(nt + 1);
  out.all_subsets_checked = true;
  out.max_subset_spread = 0.0;

  for (int k = 0; k <= nt; ++k) {
    // Canonical subset: first k tweezed ions.
    std::vector<int> flags(config.n_ions, 0);
    for (int j = 0; j < k; ++j) flags[tweezed_ions[j]] = 1;
    out.freqs[k] = freq_for(flags);

    if (k == 0 || k == nt) continue;

    // Enumerate all k-subsets of tweezed ions when cheap; record the spread.
    // Subsets are ranked by a combination counter so the reduction order is
    // fixed regardless of thread count.
    std::vector<std::vector<int>> subsets;
    std::vector<int> idx(k);
    for (int j = 0; j < k; ++j) idx[j] = j;
    while (true) {
      subsets.push_back(idx);
      if (static_cast<int>(subsets.size()) > max_subsets) break;
      int p = k - 1;
      while (p >= 0 && idx[p] == nt - k + p) --p;
      if (p < 0) break;
      ++idx[p];
      for (int q = p + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
    }
    if (static_cast<int>(subsets.size()) > max_subsets) {
      out.all_subsets_checked = false;
      continue;
    }

    std::vector<double> freqs(subsets.size());
    const int n_sub = static_cast<int>(subsets.size());
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (int s = 0; s < n_sub; ++s) {
      std::vector<int> f(config.n_ions, 0);
      for (int j : subsets[s]) f[tweezed_ions[j]] = 1;
      freqs[s] = freq_for(f);
    }
    double lo = freqs[0], hi = freqs[0];
    for (double f : freqs) {
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    out.max_subset_spread = std::max(out.max_subset_spread, hi - lo);
  }

  out.per_shift = nt > 0 ? (out.freqs[nt] - out.freqs[0]) / nt : 0.0;
  return out;
}

} // namespace twz::chain
