#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

// Bichromatic sideband-drive dynamics in the rotating-wave convention:
// phase-space trajectories, accumulated two-qubit phase, spin populations
// for the pair of driven ions traced over a thermal mode, parity fringes,
// and fidelity bookkeeping.
namespace twz::dynamics {

// One bichromatic tone: `detuning` is the symmetric sideband offset from the
// carrier (rad/s, near the mode frequency), `rabi` the per-ion Rabi rate.
struct Tone {
  double detuning = 0.0;
  double rabi = 0.0;
  double phase = 0.0;
};

struct DriveSpec {
  std::vector<Tone> tones;
  double duration = 0.0; // s
  void validate() const;
};

enum class Control { S, D };

// Parameters of one gate-mode interaction. `eta` holds the coupling of each
// driven ion to the gate mode; the closed-form evolution covers the
// symmetric two-ion case (equal couplings).
struct GateContext {
  double mode_freq = 0.0;       // rad/s, possibly control-conditioned
  std::vector<double> eta;      // per driven ion
  double nbar = 0.0;            // mean thermal phonon number
  Control control = Control::D; // reporting only
  void validate() const;
};

struct TrajectoryResult {
  std::vector<double> times;
  std::vector<std::complex<double>> alpha;
  std::vector<double> phi;
};

struct PopulationTrace {
  std::vector<double> times;
  std::vector<double> p_ss;
  std::vector<double> p_mixed;
  std::vector<double> p_dd;
};

// Spin-state summary at one instant: populations plus the SS-DD coherence
// (rho_{SS,DD}); enough to build parity fringes and fidelities.
struct FinalState {
  double p_ss = 0.0;
  double p_mixed = 0.0;
  double p_dd = 0.0;
  std::complex<double> coherence{0.0, 0.0};
};

// Pair of 4x4 two-qubit blocks (basis SS, SD, DS, DD), one per control
// state; `canonical` marks the (pi, pi/2) pair realizing the controlled
// entangling gate up to a local XX rotation.
struct CmsUnitary {
  Eigen::Matrix4cd control_d;
  Eigen::Matrix4cd control_s;
  bool canonical = false;
  bool control_independent = false;
};

struct ParityScan {
  std::vector<double> phases;
  std::vector<double> parity;
  double amplitude = 0.0;    // fitted A_p
  double offset_phase = 0.0; // fitted phi_0 of A_p*sin(2*phi + phi_0)
  double residual = 0.0;     // rms misfit
  bool degenerate = false;   // flat curve, amplitude pinned to zero
};

struct FitResult {
  double detuning = 0.0; // rad/s, magnitude of the mode-drive offset
  double detuning_sigma = 0.0;
  double rabi = 0.0;
  double rabi_sigma = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// n uniformly spaced samples covering [0, t_end], endpoints included.
std::vector<double> uniform_grid(double t_end, int n = 512);

// alpha(t) = (eta/2) * sum_i rabi_i e^{-i phase_i} E(mode_freq - mu_i, t).
std::complex<double> displacement(const DriveSpec& drive, double mode_freq,
                                  double eta, double t);
std::vector<std::complex<double>> displacement_trajectory(
    const DriveSpec& drive, double mode_freq, double eta,
    const std::vector<double>& t_grid);

// Accumulated two-qubit phase 4*Im integral_0^t alpha_dot^* alpha dt',
// normalized so a single tone detuned by d with t = 2*pi*n/d gives exactly
// eta^2 rabi^2 t / d.
double entanglement_phase(const DriveSpec& drive, double mode_freq, double eta,
                          double t);

TrajectoryResult trajectory(const DriveSpec& drive, double mode_freq,
                            double eta, const std::vector<double>& t_grid);

// Spin populations of the two driven ions starting from |SS>, traced over a
// thermal mode with mean occupation ctx.nbar.
PopulationTrace ms_populations(const GateContext& ctx, const DriveSpec& drive,
                               const std::vector<double>& t_grid);

// Full state summary at time t (t < 0 means drive.duration).
FinalState final_state(const GateContext& ctx, const DriveSpec& drive,
                       double t = -1.0);

CmsUnitary cms_unitary(double phi_d, double phi_s);

ParityScan parity_scan(const FinalState& state,
                       const std::vector<double>& phi_grid);

// Case D: F = p_DD. Case S: F = (p_SS + p_DD)/2 + A_p/2.
double state_fidelity(double p_ss, double p_dd, double parity_amplitude,
                      Control which);

// Least-squares recovery of the effective gate detuning (and optionally the
// Rabi rate) from a population trace, starting from `initial_guess`.
FitResult fit_detuning(const GateContext& ctx, const DriveSpec& nominal,
                       const PopulationTrace& observed, double initial_guess,
                       bool fit_rabi = false);

} // namespace twz::dynamics
