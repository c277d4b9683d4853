#include "phasetomo/wire.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "phasetomo/error.hpp"
#include "phasetomo/parallel.hpp"

namespace phasetomo {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double edge_displacement(const std::vector<EdgeDefect>& defects, double x) {
  double stretch = 0.0;
  for (const auto& d : defects) {
    stretch += d.longitudinal_stretch * std::sin(2.0 * constants::pi * x / d.wavelength + d.phase);
  }
  double shift = 0.0;
  for (const auto& d : defects) {
    shift += d.transverse_amplitude * std::sin(2.0 * constants::pi * (x - stretch) / d.wavelength + d.phase);
  }
  return shift;
}

struct Filament {
  std::vector<Vec3> points;  // polyline vertices
  double current;
};

struct Layout {
  std::vector<Filament> filaments;
};

// Builds the filament polylines. Defects are tapered to zero over the outer
// half of the margin so the truncated wire ends do not leave a residual kink.
Layout build_layout(const WireGeometry& g, double half_window, double margin, double segment,
                    std::size_t n_trans, std::size_t n_vert) {
  const double half_length = half_window + margin;
  const auto n_seg = static_cast<std::size_t>(std::ceil(2.0 * half_length / segment));
  const double h = 2.0 * half_length / static_cast<double>(n_seg);
  const double taper_start = half_window + 0.5 * margin;

  std::vector<double> xs(n_seg + 1), left(n_seg + 1), right(n_seg + 1);
  for (std::size_t k = 0; k <= n_seg; ++k) {
    const double x = -half_length + h * static_cast<double>(k);
    double taper = 1.0;
    if (std::abs(x) > taper_start) {
      const double f = (std::abs(x) - taper_start) / (half_length - taper_start);
      taper = std::pow(std::cos(0.5 * constants::pi * std::min(f, 1.0)), 2);
    }
    xs[k] = x;
    left[k] = taper * edge_displacement(g.edge_left, x);
    right[k] = taper * edge_displacement(g.edge_right, x);
  }

  Layout layout;
  const double per_filament = g.current / static_cast<double>(n_trans * n_vert);
  for (std::size_t i = 0; i < n_trans; ++i) {
    const double f = (static_cast<double>(i) + 0.5) / static_cast<double>(n_trans);
    for (std::size_t j = 0; j < n_vert; ++j) {
      const double z = g.thickness * ((static_cast<double>(j) + 0.5) / static_cast<double>(n_vert) - 0.5);
      Filament fil;
      fil.current = per_filament;
      fil.points.reserve(n_seg + 1);
      for (std::size_t k = 0; k <= n_seg; ++k) {
        const double y = -0.5 * g.width + f * g.width + (1.0 - f) * left[k] + f * right[k];
        fil.points.push_back({xs[k], y, z});
      }
      layout.filaments.push_back(std::move(fil));
    }
  }
  return layout;
}

// μ·(b̂·B) at (x, 0, d) in joules.
double projected_energy(const Layout& layout, const WireGeometry& g, const Vec3& bias, double x) {
  const Vec3 r{x, 0.0, g.distance};
  double acc = 0.0;
  for (const auto& fil : layout.filaments) {
    for (std::size_t k = 0; k + 1 < fil.points.size(); ++k) {
      acc += dot(bias, segment_field(fil.points[k], fil.points[k + 1], fil.current, r));
    }
  }
  return g.magnetic_moment * acc;
}

struct Evaluation {
  std::vector<DefectAmplitude> per_defect;
  double total_K;
};

Evaluation evaluate(const WireGeometry& g, const Vec3& bias, const std::vector<double>& wavelengths,
                    double lambda_min, double lambda_max, double segment, std::size_t n_trans,
                    std::size_t n_vert, double samples_per_wavelength) {
  const double half_window = lambda_max;  // window spans two longest periods
  const double margin = std::max(10.0 * g.distance, 2.0 * lambda_max);
  const Layout layout = build_layout(g, half_window, margin, segment, n_trans, n_vert);

  Evaluation out;
  for (const double lambda : wavelengths) {
    const auto periods = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(2.0 * half_window / lambda)));
    const auto n = static_cast<std::size_t>(std::ceil(samples_per_wavelength)) * periods;
    const double span = lambda * static_cast<double>(periods);
    std::vector<double> energy(n);
    parallel_for(0, n, [&](std::size_t s) {
      const double x = -0.5 * span + span * static_cast<double>(s) / static_cast<double>(n);
      energy[s] = projected_energy(layout, g, bias, x);
    });
    std::complex<double> coeff{0.0, 0.0};
    const double k = 2.0 * constants::pi / lambda;
    for (std::size_t s = 0; s < n; ++s) {
      const double x = -0.5 * span + span * static_cast<double>(s) / static_cast<double>(n);
      coeff += energy[s] * std::polar(1.0, -k * x);
    }
    out.per_defect.push_back({lambda, 2.0 * std::abs(coeff) / static_cast<double>(n) / constants::kB});
  }

  const auto n_total =
      static_cast<std::size_t>(std::ceil(2.0 * half_window / lambda_min * samples_per_wavelength));
  std::vector<double> energy(n_total);
  parallel_for(0, n_total, [&](std::size_t s) {
    const double x = -half_window + 2.0 * half_window * static_cast<double>(s) / static_cast<double>(n_total);
    energy[s] = projected_energy(layout, g, bias, x);
  });
  const auto [lo, hi] = std::minmax_element(energy.begin(), energy.end());
  out.total_K = 0.5 * (*hi - *lo) / constants::kB;
  return out;
}

}  // namespace

void WireGeometry::validate() const {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) throw InputError(std::string("WireGeometry.") + name + " must be > 0");
  };
  positive(width, "width");
  positive(thickness, "thickness");
  positive(current, "current");
  positive(distance, "distance");
  positive(magnetic_moment, "magnetic_moment");
  for (const auto* edge : {&edge_left, &edge_right}) {
    for (const auto& d : *edge) {
      positive(d.wavelength, "defect wavelength");
      if (!std::isfinite(d.transverse_amplitude) || !std::isfinite(d.longitudinal_stretch) ||
          !std::isfinite(d.phase)) {
        throw InputError("WireGeometry: defect parameters must be finite");
      }
    }
  }
  const double norm = std::sqrt(dot(bias_direction, bias_direction));
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InputError("WireGeometry.bias_direction must be non-zero");
}

std::array<double, 3> segment_field(const std::array<double, 3>& a, const std::array<double, 3>& b,
                                    double current, const std::array<double, 3>& r) {
  const Vec3 l = sub(b, a);
  const Vec3 r1 = sub(r, a);
  const Vec3 r2 = sub(r, b);
  const Vec3 c = cross(l, r1);
  const double c2 = dot(c, c);
  if (c2 <= 0.0) return {0.0, 0.0, 0.0};
  const double n1 = std::sqrt(dot(r1, r1));
  const double n2 = std::sqrt(dot(r2, r2));
  const double scale = constants::mu_0 * current / (4.0 * constants::pi) * (dot(l, r1) / n1 - dot(l, r2) / n2) / c2;
  return {scale * c[0], scale * c[1], scale * c[2]};
}

WireCorrugationResult wire_corrugation_amplitude(const WireGeometry& geom, const WireDiscretization& disc) {
  geom.validate();
  if (geom.distance < 0.25 * geom.width) {
    throw InputError("wire_corrugation_amplitude: distance must be >= width/4 for the filament model");
  }
  if (disc.n_transverse < 1 || disc.n_vertical < 1 || !(disc.segments_per_wavelength > 2.0) ||
      !(disc.samples_per_wavelength >= 4.0)) {
    throw InputError("wire_corrugation_amplitude: invalid discretization");
  }

  std::vector<double> wavelengths;
  for (const auto* edge : {&geom.edge_left, &geom.edge_right}) {
    for (const auto& d : *edge) wavelengths.push_back(d.wavelength);
  }
  if (wavelengths.empty()) throw InputError("wire_corrugation_amplitude: no edge defects given");
  std::sort(wavelengths.begin(), wavelengths.end());
  wavelengths.erase(std::unique(wavelengths.begin(), wavelengths.end(),
                                [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }),
                    wavelengths.end());
  const double lambda_min = wavelengths.front();
  const double lambda_max = wavelengths.back();

  Vec3 bias = geom.bias_direction;
  const double norm = std::sqrt(dot(bias, bias));
  for (auto& c : bias) c /= norm;

  const double segment = std::min(lambda_min / disc.segments_per_wavelength, 0.25 * geom.distance);
  const auto coarse = evaluate(geom, bias, wavelengths, lambda_min, lambda_max, 2.0 * segment,
                               std::max<std::size_t>(1, disc.n_transverse / 2), disc.n_vertical,
                               disc.samples_per_wavelength);
  const auto fine = evaluate(geom, bias, wavelengths, lambda_min, lambda_max, segment, disc.n_transverse,
                             disc.n_vertical, disc.samples_per_wavelength);

  // Amplitudes below a picokelvin are treated as zero when judging convergence.
  constexpr double floor_K = 1e-12;
  double worst = 0.0;
  for (std::size_t i = 0; i < fine.per_defect.size(); ++i) {
    const double a = fine.per_defect[i].amplitude_K;
    const double b = coarse.per_defect[i].amplitude_K;
    worst = std::max(worst, std::abs(a - b) / std::max(a, floor_K));
  }
  if (worst > disc.max_relative_error) {
    std::ostringstream msg;
    msg << "wire_corrugation_amplitude: discretization too coarse (estimated relative error " << worst
        << " > " << disc.max_relative_error << "; segment " << segment << " m, " << disc.n_transverse
        << " transverse filaments). Increase segments_per_wavelength or n_transverse.";
    throw RefinementError(msg.str());
  }

  WireCorrugationResult result;
  result.per_defect = fine.per_defect;
  result.total_amplitude_K = fine.total_K;
  result.estimated_relative_error = worst;
  return result;
}

}  // namespace phasetomo
