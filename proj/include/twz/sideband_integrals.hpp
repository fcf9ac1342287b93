#pragma once

#include <cmath>
#include <complex>

// Closed-form time integrals shared by the trajectory evaluator and the
// pulse-synthesis constraint assembly. All detunings are angular (rad/s).
namespace twz::sideband {

// E(g, t) = integral_0^t e^{i g t'} dt'.
// Written as (sin(gt) + 2i sin^2(gt/2)) / g, which stays accurate for
// small g·t; g = 0 returns the exact limit t.
inline std::complex<double> tone_integral(double gamma, double t) {
  if (gamma == 0.0) return {t, 0.0};
  double x = gamma * t;
  double s = std::sin(0.5 * x);
  return {std::sin(x) / gamma, 2.0 * s * s / gamma};
}

// F(g, t) = integral_0^t t' e^{i g t'} dt'.
// Closed form (t e^{igt} - E(g,t)) / (ig) suffers cancellation for small
// g·t, so a power series is used below |g·t| = 0.5.
inline std::complex<double> ramp_integral(double gamma, double t) {
  double x = gamma * t;
  if (std::abs(x) < 0.5) {
    std::complex<double> igt(0.0, x);
    std::complex<double> term(0.5 * t * t, 0.0);
    std::complex<double> sum = term;
    for (int k = 0; k < 24; ++k) {
      term *= igt * (static_cast<double>(k + 2) /
                     (static_cast<double>(k + 3) * (k + 1)));
      sum += term;
      if (std::abs(term) < 1e-18 * t * t) break;
    }
    return sum;
  }
  std::complex<double> eixt(std::cos(x), std::sin(x));
  std::complex<double> num = t * eixt - tone_integral(gamma, t);
  // divide by i*gamma: multiply by -i/gamma
  return {num.imag() / gamma, -num.real() / gamma};
}

// K(bi, bj, t) = integral_0^t e^{-i bi t'} E(bj, t') dt'.
// Appears in the geometric-phase double integral; the bj = 0 limit is the
// ramp integral at -bi.
inline std::complex<double> phase_kernel(double beta_i, double beta_j, double t) {
  if (beta_j == 0.0) return ramp_integral(-beta_i, t);
  std::complex<double> num =
      tone_integral(beta_j - beta_i, t) - tone_integral(-beta_i, t);
  return {num.imag() / beta_j, -num.real() / beta_j};
}

} // namespace twz::sideband
