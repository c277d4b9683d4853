#include "phasetomo/potential.hpp"

#include <cmath>
#include <string>

#include "phasetomo/error.hpp"

namespace phasetomo {

using constants::kB;
using constants::micro;
using constants::nano;

void CorrugationGrid::validate() const {
  if (x.size() != delta_u.size()) throw InputError("corrugation grid: x and deltaU length mismatch");
  if (x.size() < 2) throw InputError("corrugation grid needs at least two points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(delta_u[i])) {
      throw InputError("corrugation grid contains non-finite values at row " + std::to_string(i));
    }
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw InputError("corrugation grid x must be strictly increasing (row " + std::to_string(i) + ")");
    }
  }
}

std::vector<CorrugationFeature> paper_corrugation_features() {
  // Deep wells at the ±80 µm turning-point region and shallow bumps between.
  constexpr double width = 6.0 * micro;
  return {
      {-80.0 * micro, width, -22.0 * nano * kB},
      {-30.0 * micro, width, +7.0 * nano * kB},
      {+30.0 * micro, width, +7.0 * nano * kB},
      {+80.0 * micro, width, -22.0 * nano * kB},
  };
}

CorrugationGrid corrugation_from_features(const std::vector<CorrugationFeature>& features, double x_min,
                                          double x_max, std::size_t n_points) {
  if (n_points < 2 || !(x_max > x_min)) throw InputError("corrugation_from_features: bad grid");
  CorrugationGrid grid;
  grid.x.resize(n_points);
  grid.delta_u.assign(n_points, 0.0);
  const double step = (x_max - x_min) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double x = x_min + step * static_cast<double>(i);
    grid.x[i] = x;
    for (const auto& f : features) {
      const double u = (x - f.center) / f.width;
      grid.delta_u[i] += f.amplitude * std::exp(-0.5 * u * u);
    }
  }
  return grid;
}

CorrugationGrid synth_paper_corrugation(double amplitude_scale, std::size_t n_points) {
  if (!(amplitude_scale >= 0.0) || !std::isfinite(amplitude_scale)) {
    throw InputError("synth_paper_corrugation: amplitude_scale must be finite and >= 0");
  }
  auto features = paper_corrugation_features();
  for (auto& f : features) f.amplitude *= amplitude_scale;
  return corrugation_from_features(features, -150.0 * micro, 150.0 * micro, n_points);
}

Potential1D::Potential1D(PhysicalParams params, double center) : params_(params), center_(center) {
  params_.validate();
  if (!std::isfinite(center)) throw InputError("potential center must be finite");
}

Potential1D Potential1D::with_corrugation(const CorrugationGrid& grid) const {
  grid.validate();
  Potential1D out = *this;
  out.corrugation_ = std::make_shared<const NaturalCubicSpline>(grid.x, grid.delta_u);
  return out;
}

Potential1D Potential1D::with_quartic(double scale) const {
  if (!(scale > 0.0)) throw InputError("quartic scale w must be > 0 (use infinity to disable)");
  Potential1D out = *this;
  out.quartic_scale_ = scale;
  return out;
}

Potential1D Potential1D::with_center(double center) const {
  if (!std::isfinite(center)) throw InputError("potential center must be finite");
  Potential1D out = *this;
  out.center_ = center;
  return out;
}

std::optional<std::pair<double, double>> Potential1D::corrugation_domain() const {
  if (!corrugation_) return std::nullopt;
  return std::make_pair(corrugation_->front(), corrugation_->back());
}

Potential1D::Perturbation Potential1D::perturbation_sample(double x) const {
  Perturbation out{0.0, 0.0, true};
  if (has_quartic()) {
    const double u = x - center_;
    const double k = params_.mass * params_.omega0 * params_.omega0;
    const double w2 = quartic_scale_ * quartic_scale_;
    out.energy += 0.5 * k * u * u * u * u / w2;
    out.force -= 2.0 * k * u * u * u / w2;
  }
  if (corrugation_) {
    if (corrugation_->contains(x)) {
      const auto s = corrugation_->eval(x);
      out.energy += s.value;
      out.force -= s.derivative;
    } else {
      out.in_domain = false;
    }
  }
  return out;
}

Potential1D::Sample Potential1D::eval(double x) const {
  if (!std::isfinite(x)) throw InputError("Potential1D::eval: non-finite position");
  const double u = x - center_;
  const double k = params_.mass * params_.omega0 * params_.omega0;
  const auto d = perturbation_sample(x);
  return {0.5 * k * u * u + d.energy, -k * u + d.force, d.in_domain};
}

double Potential1D::perturbation(double x) const { return perturbation_sample(x).energy; }

double Potential1D::perturbation_force(double x) const { return perturbation_sample(x).force; }

}  // namespace phasetomo
