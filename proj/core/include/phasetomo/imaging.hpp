#pragma once

#include <cstdint>
#include <vector>

#include "phasetomo/ensemble.hpp"
#include "phasetomo/phase_space_grid.hpp"
#include "phasetomo/tomography.hpp"

namespace phasetomo {

/// Row-major image (x fastest). Pixel (ix, iy) covers
/// [x.min + ix·pixel, x.min + (ix+1)·pixel) × [y.min + iy·pixel, ...).
struct DensityImage {
  UniformAxis x;
  UniformAxis y;
  std::vector<double> values;  // optical density (atoms per m² here)

  double pixel() const { return x.step(); }
  double& at(std::size_t ix, std::size_t iy) { return values[iy * x.n + ix]; }
  double at(std::size_t ix, std::size_t iy) const { return values[iy * x.n + ix]; }

  /// Throws InputError unless both axes share one positive pixel size and values are finite.
  void validate() const;
};

struct ImageFrame {
  double x_min = -150e-6;
  double x_max = 150e-6;
  double y_half = 25e-6;
};

/// Histograms positions into pixels of size `pixel` (transverse coordinate
/// drawn from the thermal ω⊥ oscillator), blurs with a Gaussian PSF of width
/// psf_sigma and adds white Gaussian noise of rms noise_rms. Each particle
/// carries weight 1/(N·pixel²). `image_index` selects the noise/transverse
/// stream together with seed.
DensityImage render_absorption_image(const Ensemble& ens, double psf_sigma, double pixel, double noise_rms,
                                     std::uint64_t seed, const ImageFrame& frame = {}, std::uint64_t image_index = 0,
                                     double center = 0.0);

/// Separable Gaussian blur (kernel truncated at 5σ, zero outside the image).
DensityImage gaussian_blur(const DensityImage& img, double psf_sigma);

/// Adds N(0, rms²) per pixel from the stream keyed by (seed, image_index).
void add_image_noise(DensityImage& img, double rms, std::uint64_t seed, std::uint64_t image_index);

double peak_value(const DensityImage& img);

struct Profile {
  UniformAxis x;
  std::vector<double> values;
  double clipped_fraction = 0.0;
};

/// Sums along the transverse axis, clamps negative columns to zero and
/// normalizes to unit sum·Δx. Throws InputError when nothing positive remains.
Profile column_integrate(const DensityImage& img);

struct ProjectionProfile {
  double theta;
  UniformAxis x;
  std::vector<double> values;
};

/// Averages repeats per angle, sorts by angle and normalizes each row.
/// Throws InputError for fewer than two distinct angles, angles outside
/// [0, π), or profiles on differing x grids.
Sinogram ingest_projection_stack(const std::vector<ProjectionProfile>& profiles);

}  // namespace phasetomo
