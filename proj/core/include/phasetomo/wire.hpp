#pragma once

#include <array>
#include <vector>

#include "phasetomo/physics.hpp"

namespace phasetomo {

/// Periodic imperfection of one wire edge.
///
/// The edge's transverse position is displaced by
///   δ(x) = Σ a·sin(k(x − u(x)) + φ),   u(x) = Σ s·sin(kx + φ),
/// summed over the defects of that edge, where a is the transverse amplitude,
/// s the longitudinal stretch amplitude and k = 2π/λ.
struct EdgeDefect {
  double wavelength = 0.0;             // m
  double transverse_amplitude = 0.0;   // m
  double longitudinal_stretch = 0.0;   // m
  double phase = 0.0;                  // rad
};

/// Flat current-carrying wire along x, atoms at height `distance` above its
/// mid-plane. Defaults follow the corrugation wire: 8 µm × 0.5 µm, 5 mA,
/// 20 µm, bias field along x, |F=2, m_F=2⟩ moment (g_F m_F = 1).
struct WireGeometry {
  double width = 8e-6;
  double thickness = 0.5e-6;
  double current = 5e-3;
  std::vector<EdgeDefect> edge_left;
  std::vector<EdgeDefect> edge_right;
  double distance = 20e-6;
  std::array<double, 3> bias_direction{1.0, 0.0, 0.0};
  double magnetic_moment = constants::mu_B;

  void validate() const;
};

struct WireDiscretization {
  std::size_t n_transverse = 8;       // filaments across the width
  std::size_t n_vertical = 2;         // filament layers across the thickness
  double segments_per_wavelength = 24.0;
  double samples_per_wavelength = 32.0;
  double max_relative_error = 0.10;
};

struct DefectAmplitude {
  double wavelength;    // m
  double amplitude_K;   // peak-to-mean potential modulation / kB
};

struct WireCorrugationResult {
  std::vector<DefectAmplitude> per_defect;  // one entry per distinct wavelength
  double total_amplitude_K = 0.0;           // (max − min)/2 over the sampling window
  double estimated_relative_error = 0.0;    // coarse vs. refined discretization
};

/// Corrugation amplitude produced by edge defects, from a direct Biot–Savart
/// sum over a discretized current distribution. Each defect wavelength gets
/// the Fourier amplitude of μ·(b̂·δB) at that wavelength along the atom line.
///
/// Throws InputError when distance < width/4 and RefinementError when halving
/// the segment length changes any amplitude by more than max_relative_error.
WireCorrugationResult wire_corrugation_amplitude(const WireGeometry& geom,
                                                 const WireDiscretization& disc = {});

/// Magnetic field (T) of a straight filament segment a→b carrying current I,
/// evaluated at r. Exact finite-segment Biot–Savart expression.
std::array<double, 3> segment_field(const std::array<double, 3>& a, const std::array<double, 3>& b,
                                    double current, const std::array<double, 3>& r);

}  // namespace phasetomo
