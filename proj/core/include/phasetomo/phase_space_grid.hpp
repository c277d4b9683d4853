#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace phasetomo {

/// Cell-centered uniform axis over [min, max] with n cells.
struct UniformAxis {
  double min = 0.0;
  double max = 1.0;
  std::size_t n = 1;

  double step() const { return (max - min) / static_cast<double>(n); }
  double center(std::size_t i) const { return min + (static_cast<double>(i) + 0.5) * step(); }
  /// Fractional cell index of coordinate v (cell i spans [i, i+1)).
  double fractional_index(double v) const { return (v - min) / step(); }

  void validate() const;
  bool operator==(const UniformAxis&) const = default;
};

/// Symmetric axis [-half_width, half_width] with n cells.
inline UniformAxis symmetric_axis(double half_width, std::size_t n) { return {-half_width, half_width, n}; }

/// Two-dimensional distribution over (q̄, p̄), both in metres (p̄ = p / mω0).
/// Values are stored row-major with q̄ fastest: index = ip * nq + iq.
struct PhaseSpaceGrid {
  UniformAxis q;
  UniformAxis p;
  std::vector<double> values;
  bool is_signed = false;  // true for Wigner functions

  PhaseSpaceGrid() = default;
  PhaseSpaceGrid(UniformAxis q_axis, UniformAxis p_axis, bool signed_values = false);

  std::size_t nq() const { return q.n; }
  std::size_t np() const { return p.n; }
  double& at(std::size_t iq, std::size_t ip) { return values[ip * q.n + iq]; }
  double at(std::size_t iq, std::size_t ip) const { return values[ip * q.n + iq]; }
  double cell_area() const { return q.step() * p.step(); }

  /// Σ values · cell area.
  double total_mass() const;
  /// Bilinear interpolation at (qv, pv); zero outside the cell-center hull.
  double interpolate(double qv, double pv) const;
  bool same_axes(const PhaseSpaceGrid& other) const { return q == other.q && p == other.p; }

  /// Throws InputError on non-finite values, bad axes, or (for classical
  /// grids) negative values.
  void validate() const;
};

/// Copy with negative values set to zero, then scaled to unit mass.
/// Returns the clipped fraction of |mass| through `clipped_fraction`.
PhaseSpaceGrid clip_and_normalize(const PhaseSpaceGrid& grid, double* clipped_fraction = nullptr);

/// Scales a (possibly signed) grid by 1/total_mass. Throws InputError for zero mass.
PhaseSpaceGrid normalize_signed(const PhaseSpaceGrid& grid);

}  // namespace phasetomo
