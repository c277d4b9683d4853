#pragma once

#include <numbers>

namespace phasetomo {

namespace constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double kB = 1.380649e-23;          // J/K
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double mu_B = 9.2740100783e-24;    // J/T
inline constexpr double mu_0 = 1.25663706212e-6;    // T m / A
inline constexpr double amu = 1.66053906660e-27;    // kg
inline constexpr double mass_rb87 = 86.909180527 * amu;

inline constexpr double micro = 1e-6;
inline constexpr double nano = 1e-9;
inline constexpr double milli = 1e-3;

}  // namespace constants

/// Global physical symbols for a cold-atom run. Defaults describe a ⁸⁷Rb
/// cloud at 160 nK in a 2π×38 Hz longitudinal / 2π×110 Hz transverse trap.
struct PhysicalParams {
  double mass = constants::mass_rb87;
  double omega0 = 2.0 * constants::pi * 38.0;
  double omega_perp = 2.0 * constants::pi * 110.0;
  double temperature = 160e-9;
  double sigma_el = 8e-16;  // 8e-12 cm²

  /// Throws InputError unless every field is finite and strictly positive.
  void validate() const;

  double kT() const { return constants::kB * temperature; }

  /// ½ m ω0² x²
  double harmonic_energy(double x) const { return 0.5 * mass * omega0 * omega0 * x * x; }

  /// Period of the unperturbed longitudinal oscillation, 2π/ω0.
  double period() const { return 2.0 * constants::pi / omega0; }

  /// Phase-space momentum scale: p̄ = p / (m ω0).
  double momentum_scale() const { return mass * omega0; }
};

}  // namespace phasetomo
