#pragma once

#include <cmath>

namespace twz::constants {

// CODATA 2018 exact/recommended values, SI units.
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12; // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;   // kg
inline constexpr double ca40_mass_amu = 39.9625908;      // 40Ca, unified amu

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

// User-facing frequencies are plain Hz; all internal math is angular.
inline constexpr double angular(double hz) { return two_pi * hz; }
inline constexpr double hz(double angular_freq) { return angular_freq / two_pi; }

} // namespace twz::constants
