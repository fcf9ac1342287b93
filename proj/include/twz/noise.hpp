#pragma once

#include <cstdint>
#include <vector>

#include "twz/dynamics.hpp"
#include "twz/exec.hpp"

// Monte-Carlo noise studies: gate fidelity under drive-intensity, trap, and
// tweezer-intensity fluctuations, and control-qubit dephasing with and
// without the staged dynamical-decoupling schedule.
namespace twz::noise {

enum class NoiseKind {
  quasi_static_gaussian, // one Gaussian draw per shot
  ornstein_uhlenbeck,    // exponentially correlated, exact discretization
  one_over_f             // sum of 20 log-spaced OU processes, equal variance
};

enum class NoiseTarget {
  drive_intensity,  // fractional; Rabi rates scale by sqrt(1 + x)
  trap_freq,        // additive rad/s on the trap frequency
  tweezer_intensity // fractional; light shift and conditional shift scale by 1+x
};

struct NoiseModel {
  NoiseKind kind = NoiseKind::quasi_static_gaussian;
  NoiseTarget target = NoiseTarget::drive_intensity;
  double amplitude = 0.0;        // RMS, fractional or rad/s per target
  double correlation_time = 0.0; // s; required for OU and 1/f kinds
  std::uint64_t seed = 0;        // mixed into the per-trial stream
  void validate() const;
};

// Staged decoupling: the drive runs in n_stages slices of tau = gate_time /
// n_stages, each followed by a control flip, an idle slice of the same
// length with the tweezer on, and a second flip; wall time is 2 * gate_time.
struct DDSchedule {
  int n_stages = 0;
  double stage_drive = 0.0;
  double stage_idle = 0.0;
  std::vector<double> pulse_times; // 2 * n_stages instantaneous flips
  double total_time = 0.0;
};

// Throws std::domain_error for n_stages < 1 or non-positive gate_time.
DDSchedule dd_schedule(double gate_time, int n_stages);

struct CoherenceResult {
  double witness = 0.0;    // |<e^{i phi}>| over trials
  double witness_se = 0.0; // delta-method standard error
  int trials = 0;
};

// Control-qubit coherence under light-shift noise with no decoupling: the
// full noisy phase integrates over one uninterrupted window.
CoherenceResult control_coherence(const NoiseModel& noise,
                                  double mean_light_shift, double duration,
                                  int trials, std::uint64_t seed,
                                  Execution exec = Execution::parallel);

// Same with the staged schedule; flips toggle the sign of the accumulating
// phase, so any shot-constant shift cancels exactly.
CoherenceResult control_coherence(const NoiseModel& noise,
                                  double mean_light_shift,
                                  const DDSchedule& schedule, int trials,
                                  std::uint64_t seed,
                                  Execution exec = Execution::parallel);

// Witness versus stage count with the noise trajectory shared across counts
// within each trial, isolating the schedule's effect from sampling noise.
std::vector<CoherenceResult> coherence_sweep(
    const NoiseModel& noise, double mean_light_shift, double gate_time,
    const std::vector<int>& stage_counts, int trials, std::uint64_t seed,
    Execution exec = Execution::parallel);

// Nominal gate for the fidelity Monte Carlo. mode_trap_ratio maps additive
// trap-frequency noise onto the gate mode (d nu_mode / d nu_trap);
// conditional_shift is the tweezer-induced mode shift that scales with
// tweezer intensity and is present only when the control sits in S.
struct GateParams {
  dynamics::GateContext context;
  dynamics::DriveSpec drive;
  double mode_trap_ratio = 1.0;
  double conditional_shift = 0.0;
  void validate() const;
};

struct FidelityStats {
  double mean = 0.0;
  double stddev = 0.0;
  double p5 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p95 = 0.0;
  int trials = 0;
};

// Per shot: one draw per channel (quasi-static sampling regardless of kind),
// parameters perturbed, closed-form evolution, fidelity against the ideal
// branch output. Percentiles use the nearest-rank convention.
FidelityStats gate_fidelity_mc(const GateParams& params,
                               const std::vector<NoiseModel>& noise,
                               int trials, std::uint64_t seed,
                               Execution exec = Execution::parallel);

} // namespace twz::noise
