#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "phasetomo/physics.hpp"
#include "phasetomo/spline.hpp"

namespace phasetomo {

/// Tabulated corrugation ΔU(x) in SI units (x in m, ΔU in J).
struct CorrugationGrid {
  std::vector<double> x;
  std::vector<double> delta_u;

  /// Throws InputError unless x is strictly increasing and all values finite.
  void validate() const;
  std::size_t size() const { return x.size(); }
};

/// One Gaussian feature of a synthetic corrugation profile.
struct CorrugationFeature {
  double center;     // m
  double width;      // m (Gaussian standard deviation)
  double amplitude;  // J (signed)
};

/// Feature list used by synth_paper_corrugation at unit scale.
std::vector<CorrugationFeature> paper_corrugation_features();

/// Smooth synthetic corrugation on [-150, 150] µm built from
/// paper_corrugation_features(), multiplied by amplitude_scale.
CorrugationGrid synth_paper_corrugation(double amplitude_scale, std::size_t n_points = 1201);

/// Sums Gaussian features onto an arbitrary grid.
CorrugationGrid corrugation_from_features(const std::vector<CorrugationFeature>& features, double x_min,
                                          double x_max, std::size_t n_points);

/// Longitudinal trap potential
///   V(x) = ½ m ω0² (x - c)² · (1 + (x - c)² / w²) + ΔU(x)
/// where the quartic factor is absent when w is infinite and ΔU is a natural
/// cubic spline through an optional corrugation grid (zero outside its domain).
class Potential1D {
 public:
  struct Sample {
    double energy;    // J
    double force;     // N
    bool in_domain;   // false when x lies outside a present corrugation grid
  };

  Potential1D() = default;
  explicit Potential1D(PhysicalParams params, double center = 0.0);

  static Potential1D harmonic(const PhysicalParams& params, double center = 0.0) {
    return Potential1D(params, center);
  }

  Potential1D with_corrugation(const CorrugationGrid& grid) const;
  Potential1D with_quartic(double scale) const;
  Potential1D with_center(double center) const;

  /// V and F = -dV/dx. Throws InputError for non-finite x.
  Sample eval(double x) const;

  /// Deviation from the pure harmonic part, ΔU(x) = V(x) - ½ m ω0² (x - c)².
  double perturbation(double x) const;
  /// ΔF(x) = -ΔU'(x).
  double perturbation_force(double x) const;

  const PhysicalParams& params() const { return params_; }
  double center() const { return center_; }
  double quartic_scale() const { return quartic_scale_; }
  bool has_quartic() const { return quartic_scale_ < std::numeric_limits<double>::infinity(); }
  bool has_corrugation() const { return static_cast<bool>(corrugation_); }
  bool is_harmonic() const { return !has_quartic() && !has_corrugation(); }
  /// Domain of the corrugation grid; empty when absent.
  std::optional<std::pair<double, double>> corrugation_domain() const;

 private:
  struct Perturbation {
    double energy;
    double force;
    bool in_domain;
  };
  Perturbation perturbation_sample(double x) const;

  PhysicalParams params_{};
  double center_ = 0.0;
  double quartic_scale_ = std::numeric_limits<double>::infinity();
  std::shared_ptr<const NaturalCubicSpline> corrugation_;
};

}  // namespace phasetomo
