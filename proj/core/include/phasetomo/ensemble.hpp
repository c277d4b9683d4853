#pragma once

#include <cstdint>
#include <vector>

#include "phasetomo/physics.hpp"

namespace phasetomo {

/// Classical particle set: longitudinal position/momentum plus transverse
/// kinetic energy (two degrees of freedom) for each atom. The RNG state is
/// a seed plus the number of counter draws consumed so far; collision
/// steps are counted separately so each step gets its own derived streams.
struct Ensemble {
  PhysicalParams params;
  std::vector<double> x;       // m
  std::vector<double> p;       // kg m/s
  std::vector<double> e_perp;  // J
  std::uint64_t seed = 0;
  std::uint64_t draws = 0;
  std::uint64_t collision_steps = 0;
  double time = 0.0;  // s

  std::size_t size() const { return x.size(); }

  /// Throws InputError unless N ≥ 1, arrays agree, coordinates are finite
  /// and every e_perp ≥ 0.
  void validate() const;
};

/// Thermal cloud in a trap displaced by x_shift: x ~ N(x_shift, kT/mω0²),
/// p ~ N(0, m kT), e_perp ~ Exp(kT).
Ensemble sample_ensemble(const PhysicalParams& params, double x_shift, std::size_t n, std::uint64_t seed);

}  // namespace phasetomo
