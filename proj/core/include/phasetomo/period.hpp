#pragma once

#include <memory>
#include <string>
#include <vector>

#include "phasetomo/ensemble.hpp"
#include "phasetomo/potential.hpp"

namespace phasetomo {

struct TurningPoints {
  double left;   // m
  double right;  // m
};

/// Turning points of the orbit of energy E that passes through the trap
/// center. Throws DomainError when E does not exceed V(center) or the orbit
/// is confined to a side well.
TurningPoints turning_points(const Potential1D& pot, double energy);

/// Oscillation period 2∫dx/v between the turning points.
double period_direct(const Potential1D& pot, double energy);

enum class PerturbationMode { exact_integral, lowest_order };

/// Period change relative to 2π/ω0 from the angular-velocity integral.
/// exact_integral solves for the phase-space radius at each angle by Newton
/// iteration (ConvergenceError after 50 steps); lowest_order integrates
/// xΔF/√(x_max²−x²) and requires max|ΔU|/E < 0.3 on the orbit.
double period_perturbative(const Potential1D& pot, double energy, PerturbationMode mode);

/// δω/ω0 as a function of longitudinal energy, interpolated with a
/// monotone piecewise cubic.
class FrequencyShiftCurve {
 public:
  struct Gap {
    double energy;
    std::string reason;
  };

  FrequencyShiftCurve() = default;
  FrequencyShiftCurve(std::vector<double> energies, std::vector<double> shifts, std::vector<Gap> gaps = {});

  /// Throws DomainError for energies outside the tabulated range.
  double operator()(double energy) const;

  bool contains(double energy) const;
  const std::vector<double>& energies() const { return energies_; }
  const std::vector<double>& shifts() const { return shifts_; }
  const std::vector<Gap>& gaps() const { return gaps_; }
  double min_shift() const;
  double max_shift() const;

 private:
  struct Interpolant;
  std::vector<double> energies_;
  std::vector<double> shifts_;
  std::vector<Gap> gaps_;
  std::shared_ptr<const Interpolant> interp_;
};

/// Tabulates δω/ω0 = T0/T − 1 with period_direct. Energies where the period
/// cannot be computed are skipped and listed in gaps(). Needs at least four
/// usable points. Throws DomainError if any |δω/ω0| ≥ 0.2.
FrequencyShiftCurve frequency_shift_curve(const Potential1D& pot, const std::vector<double>& energies);

/// Rotates each particle about the trap center by −(ω0 + δω(E)) t, keeping
/// its own phase-space radius. E includes the perturbation.
Ensemble angle_evolution(const Ensemble& ens, const Potential1D& pot, const FrequencyShiftCurve& curve, double t);

}  // namespace phasetomo
