#pragma once

#include <cstdint>
#include <vector>

#include "phasetomo/ensemble.hpp"
#include "phasetomo/phase_space_grid.hpp"
#include "phasetomo/potential.hpp"

namespace phasetomo {

struct IntegrationReport {
  std::size_t steps = 0;
  double dt = 0.0;
  /// Particles that visited positions outside the corrugation grid at least once.
  std::size_t particles_out_of_domain = 0;
};

/// Advances every particle by velocity Verlet for t_total. The step is
/// shrunk so an integer number of steps covers t_total exactly.
/// Requires dt ≤ 2π/(50 ω0).
Ensemble integrate(const Ensemble& ens, const Potential1D& pot, double dt, double t_total,
                   IntegrationReport* report = nullptr);

/// Rigid phase-space rotation about (center, 0):
///   q̄ → q̄ cosθ − p̄ sinθ,  p̄ → p̄ cosθ + q̄ sinθ,  with p̄ = p/(m ω0).
Ensemble phase_rotation(const Ensemble& ens, double theta, double center = 0.0);

/// Same rotation applied to a grid, resampled bilinearly onto its own axes.
PhaseSpaceGrid phase_rotation(const PhaseSpaceGrid& grid, double theta);

/// Exact evolution in the pure harmonic trap for time t (a rotation by −ω0 t).
Ensemble harmonic_evolution(const Ensemble& ens, double t, double center = 0.0);

/// Total longitudinal energy p²/2m + V(x).
double particle_energy(const Potential1D& pot, double x, double p);

struct PhaseMoments {
  double mean_q = 0.0;
  double mean_p = 0.0;  // p̄ units (m)
  double var_q = 0.0;
  double var_p = 0.0;
  double cov_qp = 0.0;

  /// Area of the 2σ ellipse of the covariance, 4π sqrt(det Σ).
  double ellipse_area() const;
};

/// Second moments of (x − center, p/(m ω0)).
PhaseMoments phase_moments(const Ensemble& ens, double center = 0.0);

struct TrajectorySample {
  double t;
  double x;
  double p;
};

/// Single-particle velocity-Verlet trajectory, recording every `stride` steps.
std::vector<TrajectorySample> trajectory(const Potential1D& pot, double x0, double p0, double dt, double t_total,
                                         std::size_t stride = 1);

/// Oscillation period from upward zero crossings of x − center, averaged
/// over n_periods full oscillations (linear interpolation between steps).
double trajectory_period(const Potential1D& pot, double x0, double p0, double dt, std::size_t n_periods = 4);

}  // namespace phasetomo
