#pragma once

#include <Eigen/Dense>
#include <vector>

#include "twz/exec.hpp"

namespace twz::chain {

// Static description of a linear ion chain with optional per-ion optical
// tweezers. All frequencies are angular (rad/s), masses in kg, lengths in m.
struct ChainConfig {
  int n_ions = 1;
  double ion_mass = 0.0;            // kg
  double axial_freq = 0.0;          // rad/s, common axial secular frequency
  std::vector<int> tweezer_flags;   // size n_ions, 1 = ion is tweezed
  double light_shift = 0.0;         // rad/s, AC-Stark shift at tweezer focus
  double beam_waist = 0.0;          // m
  std::vector<double> qubit_offsets; // rad/s, per-ion qubit frequency offsets

  int n_tweezed() const;
  // Throws std::invalid_argument on inconsistent sizes or non-physical values.
  void validate() const;
};

// Axial normal-mode decomposition of a chain.
struct ModeSpectrum {
  Eigen::VectorXd frequencies;   // rad/s, ascending
  Eigen::MatrixXd mode_matrix;   // row m = orthonormal mode vector b_m
  Eigen::MatrixXd lamb_dicke;    // eta(m, i) for the stored drive wavelength
  double length_scale = 0.0;     // m
  Eigen::VectorXd equilibria;    // dimensionless positions u_i, ascending
};

// Mode frequency of one selected mode as a function of how many tweezed ions
// participate in the optical potential (k = 0..n_tweezed).
struct ConditionalSpectrum {
  int gate_mode = 0;                      // mode index (0-based, ascending)
  std::vector<double> freqs;              // rad/s, entry k = freq with k ions pinned
  double per_shift = 0.0;                 // rad/s, mean shift per tweezed ion
  double max_subset_spread = 0.0;         // rad/s, max spread over subset choice
  bool all_subsets_checked = false;       // true if spread covered every subset
};

// Characteristic Coulomb length l = (e^2 / (4 pi eps0 m nu^2))^(1/3).
// Throws std::domain_error on non-positive input.
double length_scale(double axial_freq, double ion_mass);

// Dimensionless equilibrium positions minimizing the harmonic + Coulomb
// potential; damped Newton from a uniformly spaced guess, converged to
// max |gradient| <= 1e-12. Ascending order.
Eigen::VectorXd equilibrium_positions(int n_ions);

// Gradient of the dimensionless potential at positions u (for tests).
Eigen::VectorXd potential_gradient(const Eigen::VectorXd& u);

// Effective tweezer pinning frequency omega_op = 2 sqrt(hbar w_ls / (m w0^2)).
double optical_confinement(double light_shift, double beam_waist, double ion_mass);

// Dimensionless secular matrix: Coulomb Hessian plus tweezer pinning terms
// (omega_op/nu)^2 on the flagged diagonal entries. Symmetric by construction.
Eigen::MatrixXd secular_matrix(const Eigen::VectorXd& equilibria,
                               const std::vector<int>& tweezer_flags,
                               double omega_op, double axial_freq);

// Lamb-Dicke parameters from a mode decomposition:
//   eta(m, i) = b(m, i) * (2 pi / wavelength) * projection * sqrt(hbar / (2 m nu_m)).
Eigen::MatrixXd lamb_dicke(const Eigen::MatrixXd& mode_matrix,
                           const Eigen::VectorXd& frequencies,
                           double drive_wavelength, double axis_projection,
                           double ion_mass);

// Full mode solve for a chain; drive wavelength/projection feed the stored
// Lamb-Dicke matrix. Mode vectors are orthonormal, ascending in frequency,
// sign-fixed so the first non-zero component is positive.
ModeSpectrum mode_spectrum(const ChainConfig& config,
                           double drive_wavelength = 729e-9,
                           double axis_projection = 1.0);

// Conditional mode frequency of `gate_mode` versus the number k of tweezed
// ions experiencing the optical potential (internal-state-dependent pinning).
// For small chains every k-subset is evaluated and the max spread reported;
// beyond `max_subsets` evaluations per k only the canonical subset (first k
// tweezed ions) is used.
ConditionalSpectrum conditional_spectrum(const ChainConfig& config, int gate_mode,
                                         int max_subsets = 4096,
                                         Execution exec = Execution::parallel);

} // namespace twz::chain
