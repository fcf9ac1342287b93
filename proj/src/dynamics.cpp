#include "twz/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "twz/errors.hpp"
#include "twz/sideband_integrals.hpp"

namespace twz::dynamics {

namespace sb = twz::sideband;
using std::complex;

void DriveSpec::validate() const {
  if (tones.empty()) throw std::invalid_argument("drive: at least one tone required");
  if (!(duration > 0.0)) throw std::invalid_argument("drive: duration must be positive");
  for (const Tone& t : tones)
    if (t.rabi < 0.0) throw std::invalid_argument("drive: rabi rates must be >= 0");
}

void GateContext::validate() const {
  if (!(mode_freq > 0.0))
    throw std::invalid_argument("gate context: mode_freq must be positive");
  if (nbar < 0.0) throw std::invalid_argument("gate context: nbar must be >= 0");
  if (eta.size() != 2)
    throw std::invalid_argument("gate context: exactly two driven ions supported");
  double scale = std::max(std::abs(eta[0]), std::abs(eta[1]));
  if (scale == 0.0 || std::abs(eta[0] - eta[1]) > 1e-12 * scale)
    throw std::invalid_argument("gate context: equal couplings required");
}

std::vector<double> uniform_grid(double t_end, int n) {
  if (!(t_end > 0.0) || n < 2)
    throw std::invalid_argument("uniform_grid: need t_end > 0 and n >= 2");
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) g[k] = t_end * k / (n - 1);
  return g;
}

complex<double> displacement(const DriveSpec& drive, double mode_freq,
                             double eta, double t) {
  complex<double> a{0.0, 0.0};
  for (const Tone& tone : drive.tones) {
    double beta = mode_freq - tone.detuning;
    complex<double> c{std::cos(tone.phase), -std::sin(tone.phase)};
    a += tone.rabi * c * sb::tone_integral(beta, t);
  }
  return 0.5 * eta * a;
}

std::vector<complex<double>> displacement_trajectory(
    const DriveSpec& drive, double mode_freq, double eta,
    const std::vector<double>& t_grid) {
  std::vector<complex<double>> out(t_grid.size());
  for (size_t k = 0; k < t_grid.size(); ++k)
    out[k] = displacement(drive, mode_freq, eta, t_grid[k]);
  return out;
}

double entanglement_phase(const DriveSpec& drive, double mode_freq, double eta,
                          double t) {
  const size_t n = drive.tones.size();
  double phi = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Tone& ti = drive.tones[i];
    double bi = mode_freq - ti.detuning;
    for (size_t j = 0; j < n; ++j) {
      const Tone& tj = drive.tones[j];
      double bj = mode_freq - tj.detuning;
      double dphase = ti.phase - tj.phase;
      complex<double> rot{std::cos(dphase), std::sin(dphase)};
      phi += ti.rabi * tj.rabi * std::imag(rot * sb::phase_kernel(bi, bj, t));
    }
  }
  return eta * eta * phi;
}

TrajectoryResult trajectory(const DriveSpec& drive, double mode_freq,
                            double eta, const std::vector<double>& t_grid) {
  drive.validate();
  TrajectoryResult r;
  r.times = t_grid;
  r.alpha.resize(t_grid.size());
  r.phi.resize(t_grid.size());
  for (size_t k = 0; k < t_grid.size(); ++k) {
    r.alpha[k] = displacement(drive, mode_freq, eta, t_grid[k]);
    r.phi[k] = entanglement_phase(drive, mode_freq, eta, t_grid[k]);
  }
  return r;
}

namespace {

FinalState state_at(const GateContext& ctx, const DriveSpec& drive, double t) {
  double eta = ctx.eta[0];
  complex<double> a = displacement(drive, ctx.mode_freq, eta, t);
  double phi = entanglement_phase(drive, ctx.mode_freq, eta, t);
  double gamma = 2.0 * std::norm(a) * (2.0 * ctx.nbar + 1.0);
  double g1 = std::exp(-gamma);
  double g2 = std::exp(-4.0 * gamma);
  FinalState s;
  s.p_ss = 0.375 + 0.125 * g2 + 0.5 * g1 * std::cos(phi);
  s.p_dd = 0.375 + 0.125 * g2 - 0.5 * g1 * std::cos(phi);
  s.p_mixed = 0.25 * (1.0 - g2);
  s.coherence = complex<double>(0.125 * (g2 - 1.0), 0.5 * g1 * std::sin(phi));
  return s;
}

} // namespace

PopulationTrace ms_populations(const GateContext& ctx, const DriveSpec& drive,
                               const std::vector<double>& t_grid) {
  ctx.validate();
  drive.validate();
  PopulationTrace trace;
  trace.times = t_grid;
  trace.p_ss.resize(t_grid.size());
  trace.p_mixed.resize(t_grid.size());
  trace.p_dd.resize(t_grid.size());
  for (size_t k = 0; k < t_grid.size(); ++k) {
    FinalState s = state_at(ctx, drive, t_grid[k]);
    trace.p_ss[k] = s.p_ss;
    trace.p_mixed[k] = s.p_mixed;
    trace.p_dd[k] = s.p_dd;
  }
  return trace;
}

FinalState final_state(const GateContext& ctx, const DriveSpec& drive,
                       double t) {
  ctx.validate();
  drive.validate();
  return state_at(ctx, drive, t < 0.0 ? drive.duration : t);
}

CmsUnitary cms_unitary(double phi_d, double phi_s) {
  auto block = [](double phi) {
    // exp(i phi Jx^2) = e^{i phi/2} [cos(phi/2) I + i sin(phi/2) XX]
    Eigen::Matrix4cd xx = Eigen::Matrix4cd::Zero();
    xx(0, 3) = xx(1, 2) = xx(2, 1) = xx(3, 0) = 1.0;
    complex<double> global{std::cos(0.5 * phi), std::sin(0.5 * phi)};
    complex<double> diag{std::cos(0.5 * phi), 0.0};
    complex<double> anti{0.0, std::sin(0.5 * phi)};
    return (global * (diag * Eigen::Matrix4cd::Identity() + anti * xx)).eval();
  };
  CmsUnitary u;
  u.control_d = block(phi_d);
  u.control_s = block(phi_s);
  const double pi = 3.14159265358979323846;
  u.canonical =
      std::abs(phi_d - pi) < 1e-12 && std::abs(phi_s - 0.5 * pi) < 1e-12;
  u.control_independent =
      (u.control_d - u.control_s).cwiseAbs().maxCoeff() < 1e-12;
  return u;
}

ParityScan parity_scan(const FinalState& state,
                       const std::vector<double>& phi_grid) {
  if (phi_grid.size() < 4)
    throw std::invalid_argument("parity_scan: need at least 4 phases");
  ParityScan scan;
  scan.phases = phi_grid;
  scan.parity.resize(phi_grid.size());
  // P(phi) = 2 Re[e^{2 i phi} rho_{SS,DD}] + p_mixed; the constant term comes
  // from the SD-DS coherence, which equals p_mixed/2 for this family of
  // states.
  for (size_t k = 0; k < phi_grid.size(); ++k) {
    complex<double> rot{std::cos(2.0 * phi_grid[k]), std::sin(2.0 * phi_grid[k])};
    scan.parity[k] = 2.0 * std::real(rot * state.coherence) + state.p_mixed;
  }
  // Linear least squares of A_p sin(2 phi + phi_0) over (sin, cos) weights.
  double sss = 0.0, scc = 0.0, ssc = 0.0, sy = 0.0, cy = 0.0;
  for (size_t k = 0; k < phi_grid.size(); ++k) {
    double s = std::sin(2.0 * phi_grid[k]);
    double cth = std::cos(2.0 * phi_grid[k]);
    sss += s * s;
    scc += cth * cth;
    ssc += s * cth;
    sy += s * scan.parity[k];
    cy += cth * scan.parity[k];
  }
  double det = sss * scc - ssc * ssc;
  if (std::abs(det) < 1e-12)
    throw std::invalid_argument("parity_scan: phase grid does not resolve the fringe");
  double a = (scc * sy - ssc * cy) / det;
  double b = (sss * cy - ssc * sy) / det;
  scan.amplitude = std::hypot(a, b);
  double rss = 0.0;
  for (size_t k = 0; k < phi_grid.size(); ++k) {
    double fit = a * std::sin(2.0 * phi_grid[k]) + b * std::cos(2.0 * phi_grid[k]);
    rss += (scan.parity[k] - fit) * (scan.parity[k] - fit);
  }
  scan.residual = std::sqrt(rss / static_cast<double>(phi_grid.size()));
  if (scan.amplitude < 1e-12) {
    scan.degenerate = true;
    scan.amplitude = 0.0;
    scan.offset_phase = 0.0;
  } else {
    scan.offset_phase = std::atan2(b, a);
  }
  return scan;
}

double state_fidelity(double p_ss, double p_dd, double parity_amplitude,
                      Control which) {
  if (p_ss < -1e-12 || p_dd < -1e-12 || p_ss + p_dd > 1.0 + 1e-9)
    throw std::invalid_argument("state_fidelity: invalid probabilities");
  if (which == Control::D) return p_dd;
  return 0.5 * (p_ss + p_dd) + 0.5 * parity_amplitude;
}

namespace {

// Residual vector of the population model against an observed trace.
// Parameters: p[0] = effective detuning (rad/s), p[1] = rabi (optional).
Eigen::VectorXd fit_residuals(const GateContext& ctx, const DriveSpec& nominal,
                              const PopulationTrace& obs,
                              const Eigen::VectorXd& p, bool fit_rabi) {
  DriveSpec d = nominal;
  d.tones[0].detuning = ctx.mode_freq - p(0);
  if (fit_rabi) d.tones[0].rabi = p(1);
  PopulationTrace model = ms_populations(ctx, d, obs.times);
  const int n = static_cast<int>(obs.times.size());
  Eigen::VectorXd r(3 * n);
  for (int k = 0; k < n; ++k) {
    r(3 * k) = model.p_ss[k] - obs.p_ss[k];
    r(3 * k + 1) = model.p_mixed[k] - obs.p_mixed[k];
    r(3 * k + 2) = model.p_dd[k] - obs.p_dd[k];
  }
  return r;
}

} // namespace

FitResult fit_detuning(const GateContext& ctx, const DriveSpec& nominal,
                       const PopulationTrace& observed, double initial_guess,
                       bool fit_rabi) {
  ctx.validate();
  nominal.validate();
  if (nominal.tones.size() != 1)
    throw std::invalid_argument("fit_detuning: single-tone drives only");
  if (observed.times.size() < 8)
    throw std::invalid_argument("fit_detuning: trace too short");
  if (!(initial_guess > 0.0))
    throw std::invalid_argument("fit_detuning: initial guess must be positive");

  const int dim = fit_rabi ? 2 : 1;
  Eigen::VectorXd p(dim);
  p(0) = initial_guess;
  if (fit_rabi) p(1) = nominal.tones[0].rabi;

  auto resid = [&](const Eigen::VectorXd& q) {
    return fit_residuals(ctx, nominal, observed, q, fit_rabi);
  };

  Eigen::VectorXd r = resid(p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;
  Eigen::MatrixXd jac(r.size(), dim);
  for (; iter < 500; ++iter) {
    // central-difference Jacobian
    for (int c = 0; c < dim; ++c) {
      double h = std::max(1e-7 * std::abs(p(c)), 1e-4);
      Eigen::VectorXd pp = p, pm = p;
      pp(c) += h;
      pm(c) -= h;
      jac.col(c) = (resid(pp) - resid(pm)) / (2.0 * h);
    }
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = jac.transpose() * r;
    if (jtj.norm() < 1e-30)
      throw NumericError("fit_detuning: model insensitive to parameters "
                         "(flat trace), residual " + std::to_string(std::sqrt(cost)));
    bool stepped = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int c = 0; c < dim; ++c) damped(c, c) += lambda * jtj(c, c);
      Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      Eigen::VectorXd pn = p + step;
      Eigen::VectorXd rn = resid(pn);
      double cn = rn.squaredNorm();
      if (cn < cost) {
        double rel = step.cwiseQuotient(
                             p.cwiseAbs().cwiseMax(1e-12)).cwiseAbs().maxCoeff();
        p = pn;
        r = rn;
        cost = cn;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (rel <= 1e-10) converged = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (converged || !stepped) {
      if (!stepped && cost < 1e-18) converged = true; // already at the optimum
      break;
    }
  }
  if (!converged && cost > 1e-12)
    throw NumericError("fit_detuning: no convergence, residual norm " +
                       std::to_string(std::sqrt(cost)));

  FitResult out;
  out.detuning = std::abs(p(0));
  out.rabi = fit_rabi ? p(1) : nominal.tones[0].rabi;
  out.iterations = iter;
  out.converged = true;
  out.residual_norm = std::sqrt(cost);
  // 1-sigma from the residual covariance at the solution
  int dof = static_cast<int>(r.size()) - dim;
  double s2 = dof > 0 ? cost / dof : 0.0;
  Eigen::MatrixXd cov = (jac.transpose() * jac).inverse() * s2;
  out.detuning_sigma = std::sqrt(std::max(cov(0, 0), 0.0));
  if (fit_rabi) out.rabi_sigma = std::sqrt(std::max(cov(1, 1), 0.0));
  return out;
}

} // namespace twz::dynamics
