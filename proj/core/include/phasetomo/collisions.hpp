#pragma once

#include <cstdint>

#include "phasetomo/ensemble.hpp"
#include "phasetomo/rng.hpp"

namespace phasetomo {

struct CollisionReport {
  std::size_t collisions = 0;
  std::size_t pairs_tested = 0;
  double max_pair_probability = 0.0;
};

/// Thermal transverse cross-section 2π kT / (m ω⊥²) used as the collision
/// volume's transverse area.
double transverse_area(const PhysicalParams& params);

/// Relative speed entering the pair collision probability: longitudinal
/// velocity difference plus randomly oriented transverse velocities.
double relative_speed(double p1, double e1, double p2, double e2, double mass);

/// Elastic scattering of one pair. The longitudinal centre-of-mass velocity
/// and the total (longitudinal + transverse) kinetic energy are conserved;
/// the relative momentum is redirected uniformly on the sphere, its axial
/// part assigned to the x-velocities and the remaining energy split equally
/// between the two transverse energies.
void scatter_pair(double& p1, double& e1, double& p2, double& e2, double mass, CounterRng& rng);

/// One stochastic collision step of length dt. Particles are binned into
/// cells of length cell_size along x; each pair in a cell collides with
/// probability σ v_rel dt / (cell_size · A⊥). Pairs are visited in
/// lexicographic order within each cell and every cell draws from its own
/// stream keyed by (seed, step, cell index).
///
/// Throws InputError if cell_size ≤ 0 or any pair probability exceeds 0.1.
Ensemble collision_step(const Ensemble& ens, double dt, double cell_size, std::uint64_t seed,
                        CollisionReport* report = nullptr);

}  // namespace phasetomo
