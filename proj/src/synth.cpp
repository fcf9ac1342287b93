#include "twz/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "twz/constants.hpp"
#include "twz/errors.hpp"
#include "twz/rng.hpp"
#include "twz/sideband_integrals.hpp"

namespace twz::synth {

namespace {

constexpr std::uint64_t kMultistartChannel = 0x53594e5448ull;

// Phase constraints reduced onto the closure null space: h_k(y) =
// y^T forms[k] y - tau_k = 0, with y the null-space coordinates.
struct ReducedSystem {
  std::vector<Eigen::MatrixXd> forms;
  Eigen::VectorXd tau;
  double scale_h = 1.0; // max(1, max |tau|), sets residual tolerances
};

Eigen::VectorXd phase_residual(const ReducedSystem& sys,
                               const Eigen::VectorXd& y) {
  Eigen::VectorXd h(sys.tau.size());
  for (int k = 0; k < sys.tau.size(); ++k)
    h(k) = y.dot(sys.forms[static_cast<std::size_t>(k)] * y) - sys.tau(k);
  return h;
}

Eigen::MatrixXd phase_jacobian(const ReducedSystem& sys,
                               const Eigen::VectorXd& y) {
  Eigen::MatrixXd jac(sys.tau.size(), y.size());
  for (int k = 0; k < sys.tau.size(); ++k)
    jac.row(k) = 2.0 * (sys.forms[static_cast<std::size_t>(k)] * y).transpose();
  return jac;
}

// Gauss-Newton with minimum-norm steps and backtracking; works for square and
// underdetermined reduced systems alike. Returns true on a converged root.
bool gauss_newton_root(const ReducedSystem& sys, Eigen::VectorXd& y,
                       int max_iters) {
  const double tol = 1e-11 * sys.scale_h;
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::VectorXd h = phase_residual(sys, y);
    if (h.lpNorm<Eigen::Infinity>() <= tol) return true;
    Eigen::MatrixXd jac = phase_jacobian(sys, y);
    Eigen::VectorXd step =
        jac.completeOrthogonalDecomposition().solve(-h).eval();
    if (!step.allFinite()) return false;
    double f0 = h.squaredNorm();
    double s = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd cand = y + s * step;
      double fc = phase_residual(sys, cand).squaredNorm();
      if (fc <= f0 * (1.0 - 1e-4 * s) || fc <= tol * tol) {
        y = cand;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted)
      return phase_residual(sys, y).lpNorm<Eigen::Infinity>() <= tol;
  }
  return phase_residual(sys, y).lpNorm<Eigen::Infinity>() <= tol;
}

// With more null-space directions than phase targets the root manifold has
// positive dimension; polish the root toward the local power minimum via
// Newton on the stationarity system y + sum_k lambda_k forms[k] y = 0,
// re-projecting onto the constraint manifold after every step.
void polish_power(const ReducedSystem& sys, Eigen::VectorXd& y) {
  const int d = static_cast<int>(y.size());
  const int nc = static_cast<int>(sys.tau.size());
  const double tol = 1e-11 * sys.scale_h;

  Eigen::VectorXd best = y;
  double best_power = y.squaredNorm();

  Eigen::MatrixXd mult(d, nc);
  for (int k = 0; k < nc; ++k)
    mult.col(k) = sys.forms[static_cast<std::size_t>(k)] * y;
  Eigen::VectorXd lambda =
      mult.completeOrthogonalDecomposition().solve(-y).eval();
  if (!lambda.allFinite()) return;

  for (int iter = 0; iter < 60; ++iter) {
    for (int k = 0; k < nc; ++k)
      mult.col(k) = sys.forms[static_cast<std::size_t>(k)] * y;
    Eigen::VectorXd grad = y + mult * lambda;
    Eigen::VectorXd h = phase_residual(sys, y);

    Eigen::VectorXd rhs(d + nc);
    rhs.head(d) = -grad;
    rhs.tail(nc) = -0.5 * h;

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(d + nc, d + nc);
    kkt.topLeftCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
    for (int k = 0; k < nc; ++k)
      kkt.topLeftCorner(d, d) += lambda(k) * sys.forms[static_cast<std::size_t>(k)];
    kkt.topRightCorner(d, nc) = mult;
    kkt.bottomLeftCorner(nc, d) = mult.transpose();

    Eigen::VectorXd step = kkt.fullPivLu().solve(rhs);
    if (!step.allFinite()) break;
    double step_norm = step.norm();
    if (step_norm <= 1e-13 * (1.0 + y.norm() + lambda.norm())) break;

    double f0 = grad.squaredNorm() + 0.25 * h.squaredNorm();
    double s = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd yc = y + s * step.head(d);
      Eigen::VectorXd lc = lambda + s * step.tail(nc);
      Eigen::MatrixXd mc(d, nc);
      for (int k = 0; k < nc; ++k)
        mc.col(k) = sys.forms[static_cast<std::size_t>(k)] * yc;
      Eigen::VectorXd hc = phase_residual(sys, yc);
      double fc = (yc + mc * lc).squaredNorm() + 0.25 * hc.squaredNorm();
      if (fc < f0) {
        y = yc;
        lambda = lc;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;

    // Pull the iterate back onto the constraint manifold before scoring it.
    if (phase_residual(sys, y).lpNorm<Eigen::Infinity>() > tol)
      if (!gauss_newton_root(sys, y, 10)) break;
    double power = y.squaredNorm();
    if (phase_residual(sys, y).lpNorm<Eigen::Infinity>() <= tol &&
        power < best_power) {
      best = y;
      best_power = power;
    }
  }
  y = best;
}

struct DriveTone {
  double detuning = 0.0;
  double amplitude = 0.0; // signed
};

std::vector<DriveTone> signed_tones(const SynthSolution& sol) {
  std::vector<DriveTone> out;
  out.reserve(sol.tones.size());
  for (const auto& t : sol.tones)
    out.push_back({t.detuning, (t.sign < 0 ? -t.rabi : t.rabi)});
  return out;
}

} // namespace

void SynthProblem::validate() const {
  const std::size_t nc = effective_modes.size();
  if (nc == 0) throw std::invalid_argument("synthesis needs at least one configuration");
  if (eta_per_mode.size() != nc)
    throw std::invalid_argument("eta_per_mode size must match effective_modes");
  if (target_phases.size() != nc)
    throw std::invalid_argument("target_phases size must match effective_modes");
  if (tone_detunings.empty())
    throw std::invalid_argument("synthesis needs at least one tone");
  if (!(duration > 0.0))
    throw std::invalid_argument("synthesis duration must be positive");
  if (max_total_rabi < 0.0)
    throw std::invalid_argument("Rabi budget must be nonnegative");
  for (double nu : effective_modes)
    if (!(nu > 0.0))
      throw std::invalid_argument("effective mode frequencies must be positive");
  for (double eta : eta_per_mode)
    if (eta == 0.0)
      throw std::invalid_argument("configuration coupling must be nonzero");
}

ConstraintSystem build_constraints(const SynthProblem& problem) {
  problem.validate();
  const int nc = static_cast<int>(problem.effective_modes.size());
  const int nt = static_cast<int>(problem.tone_detunings.size());
  const double t = problem.duration;

  ConstraintSystem sys;
  sys.closure.resize(nc, nt);
  sys.phase_forms.reserve(static_cast<std::size_t>(nc));
  for (int k = 0; k < nc; ++k) {
    Eigen::VectorXd beta(nt);
    for (int i = 0; i < nt; ++i)
      beta(i) = problem.effective_modes[static_cast<std::size_t>(k)] -
                problem.tone_detunings[static_cast<std::size_t>(i)];
    for (int i = 0; i < nt; ++i)
      sys.closure(k, i) = sideband::tone_integral(beta(i), t);

    const double eta2 = problem.eta_per_mode[static_cast<std::size_t>(k)] *
                        problem.eta_per_mode[static_cast<std::size_t>(k)];
    Eigen::MatrixXd q(nt, nt);
    for (int i = 0; i < nt; ++i) {
      for (int j = 0; j <= i; ++j) {
        double kij = sideband::phase_kernel(beta(i), beta(j), t).imag();
        double kji = sideband::phase_kernel(beta(j), beta(i), t).imag();
        double sym = eta2 * 0.5 * (kij + kji);
        q(i, j) = sym;
        q(j, i) = sym;
      }
    }
    sys.phase_forms.push_back(std::move(q));
  }
  return sys;
}

SynthSolution solve_amplitudes(const SynthProblem& problem,
                               const SolveOptions& opts) {
  problem.validate();
  if (opts.n_starts < 1)
    throw std::invalid_argument("solver needs at least one start");
  const int nc = static_cast<int>(problem.effective_modes.size());
  const int nt = static_cast<int>(problem.tone_detunings.size());
  const double t = problem.duration;

  SynthSolution sol;
  sol.achieved_duration = t;
  sol.tones.resize(static_cast<std::size_t>(nt));
  for (int i = 0; i < nt; ++i)
    sol.tones[static_cast<std::size_t>(i)] = {
        problem.tone_detunings[static_cast<std::size_t>(i)], 0.0, 1};

  bool all_zero = true;
  for (double tau : problem.target_phases) all_zero = all_zero && tau == 0.0;
  if (all_zero) return sol; // zero drive meets every constraint exactly

  ConstraintSystem sys = build_constraints(problem);

  // Stack Re/Im closure rows; amplitudes must lie in the null space. The
  // singular-value floor uses the duration because a fully commensurate grid
  // leaves only round-off in the closure matrix (|E| <= t always).
  Eigen::MatrixXd stacked(2 * nc, nt);
  stacked.topRows(nc) = sys.closure.real();
  stacked.bottomRows(nc) = sys.closure.imag();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
  const double sigma_cut =
      opts.rank_tol * std::max(svd.singularValues().size() > 0
                                   ? svd.singularValues()(0)
                                   : 0.0,
                               t);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > sigma_cut) ++rank;
  const int dim = nt - rank;
  if (dim <= 0)
    throw InfeasibleError(
        "loop closure consumes every amplitude degree of freedom on this tone "
        "grid; use a commensurate duration or add tones");
  // dim < nc is not rejected outright: mutually consistent targets (e.g. a
  // single tone sweeping commensurate loops in several configurations) still
  // admit a root, and the residual gate below separates the two cases.
  Eigen::MatrixXd null_basis = svd.matrixV().rightCols(dim);

  ReducedSystem red;
  red.tau.resize(nc);
  double tau_max = 0.0;
  for (int k = 0; k < nc; ++k) {
    red.tau(k) = problem.target_phases[static_cast<std::size_t>(k)];
    tau_max = std::max(tau_max, std::abs(red.tau(k)));
    red.forms.push_back(null_basis.transpose() *
                        sys.phase_forms[static_cast<std::size_t>(k)] *
                        null_basis);
  }
  red.scale_h = std::max(1.0, tau_max);

  double form_scale = 0.0;
  for (const auto& b : red.forms) form_scale = std::max(form_scale, b.norm());
  if (form_scale <= 0.0)
    throw InfeasibleError(
        "phase forms vanish on the closure null space; the tone grid cannot "
        "accumulate conditional phase");
  const double start_scale = std::sqrt(tau_max / form_scale);

  const int n_starts = opts.n_starts;
  std::vector<Eigen::VectorXd> candidates(static_cast<std::size_t>(n_starts));
  std::vector<char> feasible(static_cast<std::size_t>(n_starts), 0);
  std::vector<double> power(static_cast<std::size_t>(n_starts), 0.0);
  std::vector<double> resid(static_cast<std::size_t>(n_starts), 0.0);

#pragma omp parallel for schedule(dynamic) if (opts.exec == Execution::parallel)
  for (int s = 0; s < n_starts; ++s) {
    RandomStream rng(opts.seed, kMultistartChannel,
                     static_cast<std::uint64_t>(s));
    Eigen::VectorXd y(dim);
    for (int i = 0; i < dim; ++i) y(i) = start_scale * rng.next_normal();
    bool ok = gauss_newton_root(red, y, 300);
    if (ok && dim > nc) polish_power(red, y);
    const auto idx = static_cast<std::size_t>(s);
    resid[idx] = phase_residual(red, y).lpNorm<Eigen::Infinity>();
    feasible[idx] = ok && resid[idx] <= 1e-10 * red.scale_h;
    power[idx] = y.squaredNorm();
    candidates[idx] = y;
  }

  int best = -1;
  for (int s = 0; s < n_starts; ++s) {
    const auto idx = static_cast<std::size_t>(s);
    if (!feasible[idx]) continue;
    if (best < 0 || power[idx] < power[static_cast<std::size_t>(best)])
      best = s;
  }
  if (best < 0) {
    double best_resid = *std::min_element(resid.begin(), resid.end());
    std::ostringstream msg;
    msg << "phase targets unreachable on this tone grid: no multistart "
           "converged (best phase residual "
        << best_resid << " rad)";
    throw InfeasibleError(msg.str());
  }

  Eigen::VectorXd w = null_basis * candidates[static_cast<std::size_t>(best)];
  for (int i = 0; i < nt; ++i) {
    sol.tones[static_cast<std::size_t>(i)].rabi = std::abs(w(i));
    sol.tones[static_cast<std::size_t>(i)].sign = w(i) < 0.0 ? -1 : 1;
  }
  sol.total_rabi = w.lpNorm<1>();
  sol.rabi_quadrature = w.norm();
  sol.rabi_max = w.lpNorm<Eigen::Infinity>();

  Eigen::VectorXcd closure_vals = sys.closure * w.cast<std::complex<double>>();
  double worst_closure = 0.0;
  bool closure_ok = true;
  for (int k = 0; k < nc; ++k) {
    const double eta = problem.eta_per_mode[static_cast<std::size_t>(k)];
    const double alpha_abs = 0.5 * std::abs(eta) * std::abs(closure_vals(k));
    const double scale = 0.5 * std::abs(eta) * sol.total_rabi * t;
    worst_closure = std::max(worst_closure, alpha_abs);
    closure_ok = closure_ok && alpha_abs <= opts.closure_tol * scale;
  }
  sol.residual_closure = worst_closure;

  double worst_phase = 0.0;
  for (int k = 0; k < nc; ++k) {
    double phi = w.dot(sys.phase_forms[static_cast<std::size_t>(k)] * w);
    worst_phase = std::max(
        worst_phase,
        std::abs(phi - problem.target_phases[static_cast<std::size_t>(k)]));
  }
  sol.residual_phase = worst_phase;

  if (!closure_ok)
    throw InfeasibleError(
        "loop closure cannot be met to tolerance on this tone grid "
        "(residual " +
        std::to_string(worst_closure) + ")");
  if (worst_phase > opts.phase_tol)
    throw InfeasibleError("phase residual " + std::to_string(worst_phase) +
                          " rad exceeds tolerance");
  if (problem.max_total_rabi > 0.0 && sol.total_rabi > problem.max_total_rabi) {
    std::ostringstream msg;
    msg << "Rabi budget binding: minimum-power solution needs total "
        << sol.total_rabi << " rad/s > budget " << problem.max_total_rabi
        << " rad/s";
    throw InfeasibleError(msg.str());
  }
  return sol;
}

NControlledMs n_controlled_ms(int n, double nu_com, double delta_nu,
                              double target_angle,
                              const chain::ChainConfig& chain,
                              const NcmsOptions& opts) {
  if (n < 1) throw std::invalid_argument("need at least one control ion");
  chain.validate();
  if (chain.n_tweezed() != n)
    throw std::invalid_argument("chain must carry one tweezer per control ion");
  if (chain.n_ions != n + 2)
    throw std::invalid_argument(
        "chain must hold n control ions plus two target ions");
  if (!(nu_com > 0.0)) throw std::invalid_argument("mode frequency must be positive");
  if (!(delta_nu > 0.0))
    throw std::invalid_argument("per-control shift must be positive");
  if (!(opts.drive_wavelength > 0.0))
    throw std::invalid_argument("drive wavelength must be positive");
  if (opts.duration < 0.0)
    throw std::invalid_argument("duration must be nonnegative");
  if (opts.duration_candidates < 1)
    throw std::invalid_argument("duration scan needs at least one candidate");

  int first_target = -1;
  for (int i = 0; i < chain.n_ions; ++i)
    if (!chain.tweezer_flags[static_cast<std::size_t>(i)]) {
      first_target = i;
      break;
    }

  SynthProblem prob;
  prob.max_total_rabi = opts.max_total_rabi;
  for (int k = 0; k <= n; ++k) {
    prob.effective_modes.push_back(nu_com + k * delta_nu);
    prob.target_phases.push_back(k == n ? target_angle : 0.0);
  }

  if (opts.exact_eta) {
    // Per-configuration coupling from the eigensolve with the first k control
    // tweezers pinning the chain; mode 0 is the collective gate mode.
    for (int k = 0; k <= n; ++k) {
      chain::ChainConfig cfg = chain;
      std::fill(cfg.tweezer_flags.begin(), cfg.tweezer_flags.end(), 0);
      int pinned = 0;
      for (int i = 0; i < chain.n_ions && pinned < k; ++i)
        if (chain.tweezer_flags[static_cast<std::size_t>(i)]) {
          cfg.tweezer_flags[static_cast<std::size_t>(i)] = 1;
          ++pinned;
        }
      chain::ModeSpectrum spec = chain::mode_spectrum(
          cfg, opts.drive_wavelength, opts.axis_projection);
      prob.eta_per_mode.push_back(std::abs(spec.lamb_dicke(0, first_target)));
    }
  } else {
    // Collective-mode participation of a target ion is 1/sqrt(N) regardless
    // of which controls are pinned, to first order in the pinning strength.
    const double eta =
        (constants::two_pi / opts.drive_wavelength) * opts.axis_projection *
        std::sqrt(constants::hbar / (2.0 * chain.ion_mass * nu_com)) /
        std::sqrt(static_cast<double>(chain.n_ions));
    prob.eta_per_mode.assign(static_cast<std::size_t>(n + 1), eta);
  }

  if (opts.tone_detunings.empty()) {
    // 2(n+1) tones at spacing delta_nu/2, straddling every conditional mode:
    // mu_j = nu_com + (j/2 - 1/4) delta_nu.
    for (int j = 0; j < 2 * (n + 1); ++j)
      prob.tone_detunings.push_back(nu_com + (0.5 * j - 0.25) * delta_nu);
  } else {
    prob.tone_detunings = opts.tone_detunings;
  }

  // Durations commensurate with the conditional-mode ladder close every
  // phase-space loop with tones on the half-spacing grid; scan multiples of
  // the base revival and keep the cheapest feasible drive.
  std::vector<double> durations;
  if (opts.duration > 0.0) {
    durations.push_back(opts.duration);
  } else {
    const double base = 4.0 * constants::pi / delta_nu;
    const double lo = 2.0 * constants::pi / delta_nu;
    const double hi = 8.0 * constants::pi / delta_nu;
    std::map<long, double> snapped;
    for (int i = 0; i < opts.duration_candidates; ++i) {
      double x = opts.duration_candidates == 1
                     ? lo
                     : lo + (hi - lo) * i / (opts.duration_candidates - 1);
      long mult = std::max(1L, std::lround(x / base));
      snapped.emplace(mult, mult * base);
    }
    for (const auto& kv : snapped) durations.push_back(kv.second);
  }

  SolveOptions sopts;
  sopts.phase_tol = opts.target_angle_tol;
  sopts.seed = opts.seed;
  sopts.n_starts = opts.n_starts;
  sopts.exec = opts.exec;

  NControlledMs out;
  out.n_controls = n;
  bool found = false;
  std::string last_error;
  for (double t : durations) {
    prob.duration = t;
    try {
      SynthSolution cand = solve_amplitudes(prob, sopts);
      if (!found || cand.total_rabi < out.solution.total_rabi) {
        out.solution = cand;
        out.problem = prob;
        found = true;
      }
    } catch (const InfeasibleError& err) {
      last_error = err.what();
    }
  }
  if (!found) {
    std::ostringstream msg;
    msg << "no feasible drive over " << durations.size()
        << " scanned duration(s)";
    if (!last_error.empty()) msg << "; last failure: " << last_error;
    throw InfeasibleError(msg.str());
  }

  std::ostringstream desc;
  desc << n << "-controlled collective gate: " << n << " control ion"
       << (n > 1 ? "s" : "") << " gate an XX(" << target_angle
       << " rad) entangling phase on the two target ions using "
       << out.problem.tone_detunings.size() << " tones over "
       << out.solution.achieved_duration * 1e6
       << " us; equivalent to an n-controlled phase circuit up to fixed "
          "single-qubit rotations";
  out.descriptor = desc.str();
  return out;
}

VerifyReport verify_solution(const SynthSolution& solution,
                             const SynthProblem& problem,
                             int samples_per_config, Execution exec) {
  problem.validate();
  if (solution.tones.empty())
    throw std::invalid_argument("solution carries no tones");
  if (samples_per_config < 2)
    throw std::invalid_argument("need at least two samples per configuration");
  const double t_end = problem.duration;
  const int nc = static_cast<int>(problem.effective_modes.size());
  const std::vector<DriveTone> tones = signed_tones(solution);
  double amp_sum = 0.0;
  for (const auto& tone : tones) amp_sum += std::abs(tone.amplitude);

  VerifyReport report;
  report.final_alpha_abs.assign(static_cast<std::size_t>(nc), 0.0);
  report.phase.assign(static_cast<std::size_t>(nc), 0.0);
  report.phase_error.assign(static_cast<std::size_t>(nc), 0.0);
  report.closure_scale.assign(static_cast<std::size_t>(nc), 0.0);
  std::vector<std::vector<VerifySample>> samples(static_cast<std::size_t>(nc));
  std::vector<char> integ_ok(static_cast<std::size_t>(nc), 0);
  std::vector<char> consistent(static_cast<std::size_t>(nc), 1);

  const int n_seg = samples_per_config - 1;

#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (int k = 0; k < nc; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const double eta = problem.eta_per_mode[idx];
    const double scale = 0.5 * std::abs(eta) * amp_sum * t_end;
    report.closure_scale[idx] = scale;

    std::vector<double> gamma(tones.size());
    for (std::size_t i = 0; i < tones.size(); ++i)
      gamma[i] = problem.effective_modes[idx] - tones[i].detuning;

    auto drive = [&](double t) {
      std::complex<double> sum(0.0, 0.0);
      for (std::size_t i = 0; i < tones.size(); ++i)
        sum += tones[i].amplitude *
               std::complex<double>(std::cos(gamma[i] * t),
                                    std::sin(gamma[i] * t));
      return 0.5 * eta * sum;
    };

    // One pass of classic RK4 over the drive; alpha' = drive(t),
    // phi' = 4 Im(conj(alpha') alpha). `record` captures segment boundaries.
    auto integrate = [&](int steps_per_seg,
                         std::vector<VerifySample>* record) {
      std::complex<double> alpha(0.0, 0.0);
      double phi = 0.0;
      const long total = static_cast<long>(n_seg) * steps_per_seg;
      const double h = t_end / static_cast<double>(total);
      if (record) record->push_back({0.0, 0.0, 0.0, 0.0, k});
      for (long step = 0; step < total; ++step) {
        const double t0 = t_end * static_cast<double>(step) /
                          static_cast<double>(total);
        auto rhs = [&](double t, std::complex<double> a) {
          std::complex<double> ad = drive(t);
          double dphi = 4.0 * (ad.real() * a.imag() - ad.imag() * a.real());
          return std::pair<std::complex<double>, double>(ad, dphi);
        };
        auto [k1a, k1p] = rhs(t0, alpha);
        auto [k2a, k2p] = rhs(t0 + 0.5 * h, alpha + 0.5 * h * k1a);
        auto [k3a, k3p] = rhs(t0 + 0.5 * h, alpha + 0.5 * h * k2a);
        auto [k4a, k4p] = rhs(t0 + h, alpha + h * k3a);
        alpha += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        phi += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if (record && (step + 1) % steps_per_seg == 0) {
          double ts = t_end * static_cast<double>(step + 1) /
                      static_cast<double>(total);
          record->push_back({ts, alpha.real(), alpha.imag(), phi, k});
        }
      }
      return std::pair<std::complex<double>, double>(alpha, phi);
    };

    int steps_per_seg = std::max(1, 1024 / n_seg + (1024 % n_seg ? 1 : 0));
    auto coarse = integrate(steps_per_seg, nullptr);
    bool converged = false;
    std::pair<std::complex<double>, double> fine = coarse;
    for (int level = 0; level < 14; ++level) {
      steps_per_seg *= 2;
      fine = integrate(steps_per_seg, nullptr);
      const double floor = std::max(scale, 1e-300);
      if (std::abs(fine.first - coarse.first) <= 1e-10 * floor &&
          std::abs(fine.second - coarse.second) <=
              1e-10 * std::max(1.0, std::abs(fine.second))) {
        converged = true;
        break;
      }
      coarse = fine;
    }
    integ_ok[idx] = converged;
    samples[idx].reserve(static_cast<std::size_t>(samples_per_config));
    integrate(steps_per_seg, &samples[idx]);

    report.final_alpha_abs[idx] = std::abs(fine.first);
    report.phase[idx] = fine.second;
    report.phase_error[idx] =
        std::abs(fine.second - problem.target_phases[idx]);

    // Independent integration must agree with the closed forms used by the
    // solver; a gap flags an assembly or integration defect.
    std::complex<double> alpha_closed(0.0, 0.0);
    for (std::size_t i = 0; i < tones.size(); ++i)
      alpha_closed += tones[i].amplitude *
                      sideband::tone_integral(gamma[i], t_end);
    alpha_closed *= 0.5 * eta;
    double phi_closed = 0.0;
    for (std::size_t i = 0; i < tones.size(); ++i)
      for (std::size_t j = 0; j < tones.size(); ++j)
        phi_closed += eta * eta * tones[i].amplitude * tones[j].amplitude *
                      sideband::phase_kernel(gamma[i], gamma[j], t_end).imag();
    const double floor = std::max(scale, 1e-300);
    if (std::abs(fine.first - alpha_closed) > 1e-6 * floor ||
        std::abs(fine.second - phi_closed) >
            1e-6 * std::max(1.0, std::abs(phi_closed)))
      consistent[idx] = 0;
  }

  for (int k = 0; k < nc; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    if (!integ_ok[idx])
      throw NumericError(
          "verification integrator failed to converge for configuration " +
          std::to_string(k));
    if (!consistent[idx])
      throw NumericError(
          "closed-form and integrated values disagree for configuration " +
          std::to_string(k));
  }

  bool all_pass = true;
  for (int k = 0; k < nc; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const bool closure_pass =
        report.final_alpha_abs[idx] <= 1e-6 * report.closure_scale[idx];
    const bool phase_pass = report.phase_error[idx] <= 1e-4;
    all_pass = all_pass && closure_pass && phase_pass;
  }
  report.passed = all_pass;

  for (auto& per_config : samples)
    report.samples.insert(report.samples.end(), per_config.begin(),
                          per_config.end());
  return report;
}

} // namespace twz::synth
