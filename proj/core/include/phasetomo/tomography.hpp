#pragma once

#include <span>
#include <vector>

#include "phasetomo/ensemble.hpp"
#include "phasetomo/phase_space_grid.hpp"

namespace phasetomo {

/// Projections pr(x, θ_i) on a shared cell-centered x axis (q̄ units, m).
/// values holds one row of x.n entries per angle.
struct Sinogram {
  std::vector<double> angles;  // rad, strictly increasing in [0, π)
  UniformAxis x;
  std::vector<double> values;
  bool normalized = false;

  std::size_t n_angles() const { return angles.size(); }
  std::span<const double> projection(std::size_t i) const { return {values.data() + i * x.n, x.n}; }
  std::span<double> projection(std::size_t i) { return {values.data() + i * x.n, x.n}; }

  /// Throws InputError on shape mismatch, unsorted or out-of-range angles,
  /// negative or non-finite values, or (when normalized) rows whose
  /// sum·Δx differs from 1 by more than 1e-6.
  void validate() const;
};

/// n angles kπ/n, k = 0..n-1.
std::vector<double> uniform_angles(std::size_t n);

/// Projection of a grid along the rotated axis, ∫dp̄ P(x cosθ − p̄ sinθ, x sinθ + p̄ cosθ),
/// by the midpoint rule. Normalized to unit sum·Δx unless the integral vanishes.
std::vector<double> project(const PhaseSpaceGrid& grid, double theta, const UniformAxis& x_axis);

/// Histogram of q̄ cosθ + p̄ sinθ (about `center`) over x_axis, normalized to
/// unit sum·Δx. Throws InputError for empty ensembles.
std::vector<double> project(const Ensemble& ens, double theta, const UniformAxis& x_axis, double center = 0.0);

Sinogram make_sinogram(const PhaseSpaceGrid& grid, const std::vector<double>& angles, const UniformAxis& x_axis);
Sinogram make_sinogram(const Ensemble& ens, const std::vector<double>& angles, const UniformAxis& x_axis,
                       double center = 0.0);

/// Regularized back-projection kernel; even in x.
double kernel_K(double x, double k_c);

struct FbpResult {
  PhaseSpaceGrid raw;      // signed
  PhaseSpaceGrid clipped;  // negatives removed, unit mass (empty when raw has no positive mass)
  double clipped_fraction = 0.0;
};

/// Filtered back-projection
///   P(q̄,p̄) = (1/2π²)(π/Nθ) Σ_i Σ_j w_j K(q̄cosθ_i + p̄sinθ_i − x_j) pr(x_j,θ_i)
/// with trapezoid weights w_j. Needs at least two angles.
FbpResult fbp_reconstruct(const Sinogram& sino, double k_c, const UniformAxis& q_axis, const UniformAxis& p_axis);

struct MlemResult {
  PhaseSpaceGrid grid;
  /// Mean generalized Kullback–Leibler divergence of the data from the
  /// forward projection, one entry per iteration (after the update).
  std::vector<double> kl_history;
};

/// Multiplicative expectation maximization from a uniform start. The system
/// matrix spreads each cell onto the two nearest x bins of every angle.
MlemResult mlem_reconstruct(const Sinogram& sino, std::size_t n_iter, const UniformAxis& q_axis,
                            const UniformAxis& p_axis);

/// Forward projection with the MLEM system matrix (no normalization).
Sinogram mlem_forward(const PhaseSpaceGrid& grid, const std::vector<double>& angles, const UniformAxis& x_axis);

/// Generalized KL divergence Σ Δx (m log(m/f) − m + f) averaged over angles; 0 log 0 = 0.
double mean_kl_divergence(const Sinogram& measured, const Sinogram& model);

struct GridMetrics {
  double mean_q = 0.0;
  double mean_p = 0.0;
  double var_q = 0.0;
  double var_p = 0.0;
  double cov_qp = 0.0;
  double sigma_major = 0.0;
  double sigma_minor = 0.0;
  /// sigma_major / sigma_minor (≥ 1).
  double anisotropy = 1.0;
  /// Mean resultant length of the mass-weighted polar angle about the origin.
  double resultant_length = 1.0;
  /// Circular standard deviation √(−2 ln R).
  double circular_std = 0.0;
  /// Full width of the uniform arc with the same resultant length.
  double arc_equivalent_width = 0.0;
  /// Smallest arc (rad) about the origin holding 90% of the mass.
  double angular_spread = 0.0;
};

/// Metrics of the clipped, unit-mass version of grid. Cells below
/// support_fraction × peak are dropped first, which removes the low-level
/// streak floor of sparse-angle reconstructions. Throws InputError when no
/// positive mass remains.
GridMetrics grid_metrics(const PhaseSpaceGrid& grid, double support_fraction = 0.0);

/// Bhattacharyya coefficient Σ√(P1 P2) ΔqΔp of the clipped, normalized grids.
/// Throws InputError for different axes.
double overlap(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b);

/// Width w of a uniform arc whose mean resultant length sin(w/2)/(w/2) equals R.
double arc_width_from_resultant(double resultant_length);

/// Width (rad) of the shortest run of circularly adjacent bins of a polar-angle
/// histogram over [−π, π) holding at least `fraction` of its total.
double minimal_arc(std::span<const double> angle_histogram, double fraction);

/// Samples an ensemble onto a grid with bilinear (cloud-in-cell) weights,
/// normalized to unit mass. p̄ = p/(m ω0).
PhaseSpaceGrid bin_ensemble(const Ensemble& ens, const UniformAxis& q_axis, const UniformAxis& p_axis,
                            double center = 0.0);

}  // namespace phasetomo
