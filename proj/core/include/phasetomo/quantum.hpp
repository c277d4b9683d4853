#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "phasetomo/phase_space_grid.hpp"
#include "phasetomo/potential.hpp"
#include "phasetomo/tomography.hpp"

namespace phasetomo {

/// Complex amplitudes on the periodic grid x_i = x_min + i Δx, i = 0..n-1,
/// Δx = (x_max − x_min)/n.
struct WaveFunction1D {
  PhysicalParams params;
  double x_min = 0.0;
  double x_max = 1.0;
  std::vector<std::complex<double>> psi;
  double time = 0.0;

  std::size_t size() const { return psi.size(); }
  double dx() const { return (x_max - x_min) / static_cast<double>(psi.size()); }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
  /// Σ|ψ|²Δx
  double norm() const;
  /// Wave numbers in FFT order.
  std::vector<double> wavenumbers() const;

  /// Throws InputError on an empty or non-finite state or bad extent.
  void validate() const;
};

/// ψ ∝ exp(−(x−x0)²/2σ²)·(e^{ik(x−x0)} + e^{−ik(x−x0)}), normalized on the grid.
/// Throws GridError if the grid spans less than 8σ or kΔx ≥ π/4.
WaveFunction1D init_superposition(const PhysicalParams& params, double sigma, double k, std::size_t n, double x_min,
                                  double x_max, double x0 = 0.0);

/// Harmonic-oscillator length √(ħ/mω0).
double oscillator_length(const PhysicalParams& params);

/// Fixed-step symmetric split-operator propagator (half kinetic, potential,
/// half kinetic). Holds its own FFT plans; not shareable across threads.
class SplitStepper {
 public:
  SplitStepper(const WaveFunction1D& shape, const Potential1D& pot, double dt);
  ~SplitStepper();
  SplitStepper(const SplitStepper&) = delete;
  SplitStepper& operator=(const SplitStepper&) = delete;

  /// Advances ψ by n steps; throws BoundaryError when more than 1e-6 of the
  /// probability sits within 4 cells of either edge.
  void advance(WaveFunction1D& psi, std::size_t n_steps);
  double dt() const { return dt_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double dt_;
};

/// Phase accumulated per step by the occupied modes, dt·(max T + max |V|)/ħ,
/// where "occupied" means |ψ|² or |ψ̃|² above 1e-10 of its maximum.
double split_step_phase(const WaveFunction1D& psi, const Potential1D& pot, double dt);

/// Evolves ψ for t_total with steps no longer than dt. Throws InputError when
/// split_step_phase exceeds 0.1 rad, BoundaryError on an edge breach.
WaveFunction1D evolve_schrodinger(const WaveFunction1D& psi, const Potential1D& pot, double dt, double t_total);

/// Free flight for t (exact in k-space).
WaveFunction1D free_flight(const WaveFunction1D& psi, double t);

/// W(x,p) by FFT over the offset η on the wave-function grid. Returned in
/// (q̄, p̄) units with p̄ = p/(m ω0) and unit integral. Optional half-widths
/// crop the output (0 keeps the full extent).
PhaseSpaceGrid wigner_from_wavefunction(const WaveFunction1D& psi, double q_half = 0.0, double p_half = 0.0);

std::vector<double> position_density(const WaveFunction1D& psi);
/// |ψ̃(k)|² normalized to unit sum·Δk, returned in ascending-k order with the matching k values.
std::pair<std::vector<double>, std::vector<double>> momentum_density(const WaveFunction1D& psi);

struct Uncertainties {
  double dx;     // m
  double dp;     // kg m/s
  double mean_x;
  double mean_p;
};

Uncertainties uncertainties(const WaveFunction1D& psi);
/// From the marginals of a signed grid; dp uses p = m ω0 p̄.
Uncertainties uncertainties(const PhaseSpaceGrid& wigner, const PhysicalParams& params);

struct TofGeometry {
  double theta_f;  // −arctan(ω t_f)
  double stretch;  // √(1 + ω² t_f²)
};

TofGeometry tof_geometry(double omega, double t_f);

/// Shear x → x + p̄ ω t_f resampled bilinearly on the same axes.
PhaseSpaceGrid tof_map(const PhaseSpaceGrid& grid, double omega, double t_f, TofGeometry* geometry = nullptr);
WaveFunction1D tof_map(const WaveFunction1D& psi, double omega, double t_f, TofGeometry* geometry = nullptr);

struct QuantumTomographySettings {
  std::size_t n_angles = 90;
  double t_f = 30e-3;
  double k_c = 10e6;
  double dt_max = 10e-6;
  UniformAxis projection_axis{-17e-6, 17e-6, 544};
  UniformAxis q_axis{-16e-6, 16e-6, 128};
  UniformAxis p_axis{-16e-6, 16e-6, 128};
};

struct QuantumTomographyResult {
  Sinogram sinogram;
  PhaseSpaceGrid wigner;  // signed, unit mass
  std::vector<double> hold_times;
  TofGeometry geometry{};
};

/// Holds ψ0 in the harmonic trap `pot` for each angle, releases it for t_f,
/// rescales the expanded density by the stretch factor and reconstructs by
/// signed filtered back-projection. Hold angles are chosen so the effective
/// projection angles (hold + time-of-flight rotation) cover [0, π) uniformly.
QuantumTomographyResult quantum_tomography(const WaveFunction1D& psi0, const Potential1D& pot,
                                           const QuantumTomographySettings& settings);

struct WignerFidelity {
  double abs_overlap;      // Bhattacharyya coefficient of |W|
  double sign_agreement;   // fraction of cells with |W_ref| > 0.1 max where signs match
  double relative_l2;      // ‖W − W_ref‖ / ‖W_ref‖ over the grid
};

/// Compares `w` with `reference` on w's axes (reference is interpolated).
WignerFidelity wigner_fidelity(const PhaseSpaceGrid& w, const PhaseSpaceGrid& reference);

/// ‖W − W_ref‖/‖W_ref‖ restricted to |q̄| < q_half, |p̄| < p_half (reference interpolated onto w's cells).
double relative_l2_in_box(const PhaseSpaceGrid& w, const PhaseSpaceGrid& reference, double q_half, double p_half);

struct SqueezingSample {
  double t;
  double dx;
  double dp;
  double mean_x;
};

/// Evolves ψ0 in pot and records uncertainties every `stride` steps up to t_end.
std::vector<SqueezingSample> squeezing_scan(const WaveFunction1D& psi0, const Potential1D& pot, double dt,
                                            double t_end, std::size_t stride);

/// Mean spacing of upward zero crossings of ⟨x⟩ − center (linear interpolation
/// between samples). Throws DomainError with fewer than two crossings.
double oscillation_period(const std::vector<SqueezingSample>& samples, double center = 0.0);

}  // namespace phasetomo
