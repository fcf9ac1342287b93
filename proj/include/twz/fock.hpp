#pragma once

#include <vector>

#include "twz/dynamics.hpp"
#include "twz/exec.hpp"

// Direct Schrodinger-equation integration of the driven two-qubit + one-mode
// system in a truncated number basis. Serves as the independent reference for
// the closed-form evolution in twz::dynamics.
//
// The drive couples through the collective spin component Jx, so the state
// splits into static Jx = 0 sectors and two driven Jx = +/-1 sectors whose
// motional wavefunctions obey i d/dt chi = (g(t) a^dag + g*(t) a) chi with
// g(t) = m * eta * sum_i rabi_i e^{i((mode - mu_i) t - phase_i)}.
// With `keep_counter_rotating` the fast component
// e^{i((mode + mu_i) t + phase_i)} is added to g as well, which requires far
// smaller steps and is intended for spot checks only.
namespace twz::fock {

struct OracleOptions {
  bool keep_counter_rotating = false;
  // drop initial thermal components once the missed weight is below this
  double thermal_weight_cutoff = 1e-9;
  // target integrator step; 0 picks a default per drive regime
  double max_step = 0.0;
};

struct FockResult {
  dynamics::PopulationTrace trace;
  dynamics::FinalState final_state;
  // cutoff-doubling agreement: max population change at any sample
  bool converged = false;
  double max_population_change = 0.0;
  // two-qubit phase recovered from the vacuum amplitude of the Jx = +1
  // sector (ground-state component), same sign convention as
  // dynamics::entanglement_phase; meaningful modulo 2 pi
  double phase_estimate = 0.0;
  // overlap of the reduced motional state at the last sample with the
  // initial thermal state
  double motional_return = 0.0;
};

// t_grid must start at 0 and be strictly increasing; cutoff >= 10.
FockResult fock_oracle(const dynamics::GateContext& ctx,
                       const dynamics::DriveSpec& drive, int cutoff,
                       const std::vector<double>& t_grid,
                       const OracleOptions& opts = {},
                       Execution exec = Execution::parallel);

} // namespace twz::fock
