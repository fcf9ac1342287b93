#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "twz/chain.hpp"
#include "twz/exec.hpp"

// Multi-tone drive synthesis for control-conditioned entangling gates: the
// drive must close the phase-space loop of every conditional gate mode and
// accumulate a prescribed two-qubit phase in each, with minimum power.
namespace twz::synth {

// One synthesis instance over the conditional mode set. `effective_modes`
// lists the gate-mode frequency for each control configuration (typically
// nu_com + k * delta_nu for k tweezed ions in the driven state), and
// `target_phases` the two-qubit phase each configuration must reach at
// `duration`. Tone phases are fixed to 0 or pi, expressed as signed
// amplitudes.
struct SynthProblem {
  std::vector<double> effective_modes; // rad/s, one per configuration
  std::vector<double> eta_per_mode;    // coupling of the driven ions, per cfg
  std::vector<double> target_phases;   // rad, one per configuration
  double duration = 0.0;               // s
  std::vector<double> tone_detunings;  // rad/s, carrier offsets mu_i
  double max_total_rabi = 0.0;         // budget on sum |rabi|; 0 = unbounded
  void validate() const;
};

// Closed-form constraint system: closure(k,i) = integral_0^T e^{i(nu_k-mu_i)t}
// dt, and per configuration the symmetric quadratic form giving the phase,
// phi_k = omega^T phase_forms[k] omega for signed amplitudes omega.
struct ConstraintSystem {
  Eigen::MatrixXcd closure;
  std::vector<Eigen::MatrixXd> phase_forms;
};

ConstraintSystem build_constraints(const SynthProblem& problem);

struct SynthTone {
  double detuning = 0.0; // rad/s from the carrier
  double rabi = 0.0;     // rad/s, nonnegative
  int sign = 1;          // drive phase 0 (+1) or pi (-1)
};

struct SynthSolution {
  std::vector<SynthTone> tones;
  double residual_closure = 0.0; // max_k |alpha_k(T)|
  double residual_phase = 0.0;   // max_k |phi_k - target_k|, rad
  double total_rabi = 0.0;       // sum of amplitudes
  double rabi_quadrature = 0.0;  // l2 norm of amplitudes
  double rabi_max = 0.0;         // largest single amplitude
  double achieved_duration = 0.0;
};

struct SolveOptions {
  double closure_tol = 1e-6; // relative to (eta/2) * sum|rabi| * T
  double phase_tol = 1e-4;   // rad
  double rank_tol = 1e-10;   // relative singular-value cutoff
  std::uint64_t seed = 1;
  int n_starts = 8;
  Execution exec = Execution::parallel;
};

// Amplitudes parametrized in the null space of the stacked closure rows;
// phase constraints solved by damped Newton over the null-space coordinates
// with multistart, keeping the lowest-power converged solution.
SynthSolution solve_amplitudes(const SynthProblem& problem,
                               const SolveOptions& opts = {});

struct NcmsOptions {
  double duration = 0.0;              // 0: scan commensurate candidates
  int duration_candidates = 16;       // coarse scan resolution before snapping
  std::vector<double> tone_detunings; // empty: default straddling grid
  double target_angle_tol = 1e-4;
  double max_total_rabi = 0.0;
  double drive_wavelength = 729e-9;
  double axis_projection = 1.0;
  bool exact_eta = false; // per-configuration coupling from the eigensolve
  std::uint64_t seed = 1;
  int n_starts = 8;
  Execution exec = Execution::parallel;
};

struct NControlledMs {
  SynthProblem problem; // as handed to the solver (chosen duration included)
  SynthSolution solution;
  std::string descriptor; // circuit-level summary of the synthesized gate
  int n_controls = 0;
};

// Assembles the (n+1)-configuration problem for a chain with n tweezed
// control ions and two driven target ions, placing by default 2(n+1) tones
// with spacing delta_nu/2 straddling the conditional mode ladder
// nu_com + k*delta_nu, and scanning commensurate durations.
NControlledMs n_controlled_ms(int n, double nu_com, double delta_nu,
                              double target_angle,
                              const chain::ChainConfig& chain,
                              const NcmsOptions& opts = {});

struct VerifySample {
  double t = 0.0;
  double re_alpha = 0.0;
  double im_alpha = 0.0;
  double phi = 0.0;
  int config = 0;
};

// Independent re-integration of every configuration (step-halved RK4 on the
// displacement and phase, no shared closed forms) plus plot-ready samples.
struct VerifyReport {
  std::vector<double> final_alpha_abs; // per configuration
  std::vector<double> phase;           // per configuration, rad
  std::vector<double> phase_error;     // |phase - target|
  std::vector<double> closure_scale;   // (eta_k/2) * sum|rabi| * T
  std::vector<VerifySample> samples;
  bool passed = false;
};

VerifyReport verify_solution(const SynthSolution& solution,
                             const SynthProblem& problem,
                             int samples_per_config = 129,
                             Execution exec = Execution::parallel);

} // namespace twz::synth
