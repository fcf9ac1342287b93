#include "twz/fock.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "twz/constants.hpp"
#include "twz/errors.hpp"

namespace twz::fock {

using dynamics::DriveSpec;
using dynamics::GateContext;
using std::complex;
using VecC = Eigen::VectorXcd;

namespace {

struct SectorDrive {
  std::vector<double> beta;     // mode - mu per tone
  std::vector<double> fast;     // mode + mu per tone
  std::vector<double> rabi;
  std::vector<double> phase;
  double eta = 0.0;
  bool counter_rotating = false;
};

complex<double> coupling(const SectorDrive& d, int m, double t) {
  complex<double> g{0.0, 0.0};
  for (size_t i = 0; i < d.beta.size(); ++i) {
    double slow = d.beta[i] * t - d.phase[i];
    g += d.rabi[i] * complex<double>(std::cos(slow), std::sin(slow));
    if (d.counter_rotating) {
      double quick = d.fast[i] * t + d.phase[i];
      g += d.rabi[i] * complex<double>(std::cos(quick), std::sin(quick));
    }
  }
  return static_cast<double>(m) * d.eta * g;
}

// chi' = -i (g a^dag + g* a) chi on the number ladder
void apply_rhs(const SectorDrive& d, int m, double t, const VecC& chi,
               VecC& out) {
  const int dim = static_cast<int>(chi.size());
  complex<double> g = coupling(d, m, t);
  complex<double> gc = std::conj(g);
  for (int n = 0; n < dim; ++n) {
    complex<double> h{0.0, 0.0};
    if (n > 0) h += g * std::sqrt(static_cast<double>(n)) * chi(n - 1);
    if (n + 1 < dim) h += gc * std::sqrt(static_cast<double>(n + 1)) * chi(n + 1);
    out(n) = complex<double>(0.0, -1.0) * h;
  }
}

void rk4_advance(const SectorDrive& d, int m, VecC& chi, double t0, double t1,
                 double max_step) {
  double span = t1 - t0;
  int n_sub = std::max(1, static_cast<int>(std::ceil(span / max_step)));
  double h = span / n_sub;
  const int dim = static_cast<int>(chi.size());
  VecC k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  for (int s = 0; s < n_sub; ++s) {
    double t = t0 + s * h;
    apply_rhs(d, m, t, chi, k1);
    tmp = chi + 0.5 * h * k1;
    apply_rhs(d, m, t + 0.5 * h, tmp, k2);
    tmp = chi + 0.5 * h * k2;
    apply_rhs(d, m, t + 0.5 * h, tmp, k3);
    tmp = chi + h * k3;
    apply_rhs(d, m, t + h, tmp, k4);
    chi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

struct ComponentTrace {
  std::vector<double> p_ss, p_mixed, p_dd;
  std::vector<complex<double>> coherence;
  complex<double> vacuum_amplitude{0.0, 0.0}; // <0|chi_+1(T)>, n0 = 0 only
  double return_overlap = 0.0;                // <n0|rho_mot(T)|n0>
};

// Evolve one initial number state |n0> through the whole grid.
ComponentTrace evolve_component(const SectorDrive& d, int n0, int dim,
                                const std::vector<double>& grid,
                                double max_step) {
  ComponentTrace out;
  const size_t nt = grid.size();
  out.p_ss.resize(nt);
  out.p_mixed.resize(nt);
  out.p_dd.resize(nt);
  out.coherence.resize(nt);

  VecC plus = VecC::Zero(dim), minus = VecC::Zero(dim), still = VecC::Zero(dim);
  plus(n0) = minus(n0) = still(n0) = 1.0;

  for (size_t k = 0; k < nt; ++k) {
    if (k > 0) {
      rk4_advance(d, +1, plus, grid[k - 1], grid[k], max_step);
      rk4_advance(d, -1, minus, grid[k - 1], grid[k], max_step);
    }
    VecC u = 0.25 * (plus + 2.0 * still + minus); // <SS| component
    VecC v = 0.25 * (plus - 2.0 * still + minus); // <DD| component
    VecC w = 0.25 * (plus - minus);               // <SD| = <DS| component
    out.p_ss[k] = u.squaredNorm();
    out.p_dd[k] = v.squaredNorm();
    out.p_mixed[k] = 2.0 * w.squaredNorm();
    out.coherence[k] = v.dot(u); // <SS|rho|DD>, first argument conjugated
  }
  out.vacuum_amplitude = plus(0);
  out.return_overlap =
      0.25 * (std::norm(plus(n0)) + 2.0 + std::norm(minus(n0)));
  return out;
}

struct RunOutput {
  std::vector<double> p_ss, p_mixed, p_dd;
  std::vector<complex<double>> coherence;
  complex<double> vacuum_amplitude{0.0, 0.0};
  double motional_return = 0.0;
};

RunOutput run_mixture(double nbar, const SectorDrive& drive, int dim,
                      const std::vector<double>& grid,
                      const OracleOptions& opts, Execution exec) {
  // thermal weights, truncated and renormalized
  std::vector<double> weights;
  if (nbar == 0.0) {
    weights = {1.0};
  } else {
    double p = 1.0 / (1.0 + nbar);
    double ratio = nbar / (1.0 + nbar);
    double acc = 0.0;
    while (1.0 - acc > opts.thermal_weight_cutoff &&
           static_cast<int>(weights.size()) < dim / 2) {
      weights.push_back(p);
      acc += p;
      p *= ratio;
    }
    double norm = 0.0;
    for (double w : weights) norm += w;
    for (double& w : weights) w /= norm;
  }

  const int n_comp = static_cast<int>(weights.size());
  std::vector<ComponentTrace> parts(n_comp);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (int n0 = 0; n0 < n_comp; ++n0)
    parts[n0] = evolve_component(drive, n0, dim, grid, opts.max_step);

  // fixed-order accumulation keeps the result independent of thread count
  RunOutput out;
  const size_t nt = grid.size();
  out.p_ss.assign(nt, 0.0);
  out.p_mixed.assign(nt, 0.0);
  out.p_dd.assign(nt, 0.0);
  out.coherence.assign(nt, {0.0, 0.0});
  for (int n0 = 0; n0 < n_comp; ++n0) {
    for (size_t k = 0; k < nt; ++k) {
      out.p_ss[k] += weights[n0] * parts[n0].p_ss[k];
      out.p_mixed[k] += weights[n0] * parts[n0].p_mixed[k];
      out.p_dd[k] += weights[n0] * parts[n0].p_dd[k];
      out.coherence[k] += weights[n0] * parts[n0].coherence[k];
    }
    out.motional_return += weights[n0] * parts[n0].return_overlap;
  }
  out.vacuum_amplitude = parts[0].vacuum_amplitude;
  return out;
}

} // namespace

FockResult fock_oracle(const GateContext& ctx, const DriveSpec& drive,
                       int cutoff, const std::vector<double>& t_grid,
                       const OracleOptions& opts, Execution exec) {
  ctx.validate();
  drive.validate();
  if (cutoff < 10)
    throw std::invalid_argument("fock_oracle: cutoff must be at least 10");
  if (t_grid.empty() || t_grid.front() != 0.0)
    throw std::invalid_argument("fock_oracle: time grid must start at 0");
  for (size_t k = 0; k + 1 < t_grid.size(); ++k)
    if (!(t_grid[k] < t_grid[k + 1]))
      throw std::invalid_argument("fock_oracle: time grid must be increasing");
  SectorDrive sd;
  sd.eta = ctx.eta[0];
  sd.counter_rotating = opts.keep_counter_rotating;
  double fastest = 0.0;
  for (const dynamics::Tone& tone : drive.tones) {
    sd.beta.push_back(ctx.mode_freq - tone.detuning);
    sd.fast.push_back(ctx.mode_freq + tone.detuning);
    sd.rabi.push_back(tone.rabi);
    sd.phase.push_back(tone.phase);
    fastest = std::max(fastest, std::abs(ctx.mode_freq + tone.detuning));
  }
  OracleOptions eff = opts;
  if (eff.max_step <= 0.0) {
    // the rotating-frame dynamics is slow; the counter-rotating term needs
    // the fast beat resolved
    eff.max_step = sd.counter_rotating
                       ? constants::two_pi / (40.0 * fastest)
                       : 5e-7;
  }

  RunOutput coarse = run_mixture(ctx.nbar, sd, cutoff + 1, t_grid, eff, exec);
  RunOutput fine = run_mixture(ctx.nbar, sd, 2 * cutoff + 1, t_grid, eff, exec);

  double worst = 0.0;
  for (size_t k = 0; k < t_grid.size(); ++k) {
    worst = std::max(worst, std::abs(coarse.p_ss[k] - fine.p_ss[k]));
    worst = std::max(worst, std::abs(coarse.p_mixed[k] - fine.p_mixed[k]));
    worst = std::max(worst, std::abs(coarse.p_dd[k] - fine.p_dd[k]));
  }

  FockResult result;
  result.trace.times = t_grid;
  result.trace.p_ss = fine.p_ss;
  result.trace.p_mixed = fine.p_mixed;
  result.trace.p_dd = fine.p_dd;
  result.final_state.p_ss = fine.p_ss.back();
  result.final_state.p_mixed = fine.p_mixed.back();
  result.final_state.p_dd = fine.p_dd.back();
  result.final_state.coherence = fine.coherence.back();
  result.max_population_change = worst;
  result.converged = worst <= 1e-4;
  // physical sector phase is opposite in sign to the reported gate phase
  result.phase_estimate = -std::arg(fine.vacuum_amplitude);
  result.motional_return = fine.motional_return;
  return result;
}

} // namespace twz::fock
