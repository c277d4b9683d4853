#include "phasetomo/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "phasetomo/error.hpp"
#include "phasetomo/parallel.hpp"
#include "phasetomo/rng.hpp"

namespace phasetomo {

namespace {

constexpr std::uint64_t kTransverseStream = 0x7472616e73ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

}  // namespace

void DensityImage::validate() const {
  x.validate();
  y.validate();
  if (std::abs(x.step() - y.step()) > 1e-9 * x.step()) throw InputError("image pixels must be square");
  if (values.size() != x.n * y.n) throw InputError("image value count does not match its shape");
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("image contains non-finite values");
  }
}

DensityImage render_absorption_image(const Ensemble& ens, double psf_sigma, double pixel, double noise_rms,
                                     std::uint64_t seed, const ImageFrame& frame, std::uint64_t image_index,
                                     double center) {
  ens.validate();
  if (!(pixel > 0.0)) throw InputError("render_absorption_image: pixel must be > 0");
  if (!(psf_sigma >= 0.0)) throw InputError("render_absorption_image: psf_sigma must be >= 0");
  if (!(noise_rms >= 0.0)) throw InputError("render_absorption_image: noise_rms must be >= 0");
  if (!(frame.x_max > frame.x_min) || !(frame.y_half > 0.0)) throw InputError("render_absorption_image: bad frame");

  const auto nx = static_cast<std::size_t>(std::llround((frame.x_max - frame.x_min) / pixel));
  const auto ny = static_cast<std::size_t>(std::max<long long>(1, std::llround(2.0 * frame.y_half / pixel)));
  DensityImage img;
  img.x = {frame.x_min, frame.x_min + pixel * static_cast<double>(nx), nx};
  img.y = {-0.5 * pixel * static_cast<double>(ny), 0.5 * pixel * static_cast<double>(ny), ny};
  img.values.assign(nx * ny, 0.0);

  const auto& pp = ens.params;
  const double sigma_y = std::sqrt(pp.kT() / (pp.mass * pp.omega_perp * pp.omega_perp));
  const double weight = 1.0 / (static_cast<double>(ens.size()) * pixel * pixel);
  CounterRng rng(derive_key(seed, kTransverseStream, image_index));
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double yv = sigma_y * rng.normal();
    const double fx = img.x.fractional_index(ens.x[i] - center);
    const double fy = img.y.fractional_index(yv);
    if (fx < 0.0 || fy < 0.0 || fx >= static_cast<double>(nx) || fy >= static_cast<double>(ny)) continue;
    img.at(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy)) += weight;
  }
  if (psf_sigma > 0.0) img = gaussian_blur(img, psf_sigma);
  if (noise_rms > 0.0) add_image_noise(img, noise_rms, seed, image_index);
  return img;
}

DensityImage gaussian_blur(const DensityImage& img, double psf_sigma) {
  img.validate();
  if (!(psf_sigma > 0.0)) return img;
  const double s = psf_sigma / img.pixel();
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(5.0 * s));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  double ksum = 0.0;
  for (std::ptrdiff_t d = -half; d <= half; ++d) {
    const double v = std::exp(-0.5 * static_cast<double>(d * d) / (s * s));
    kernel[static_cast<std::size_t>(d + half)] = v;
    ksum += v;
  }
  for (double& v : kernel) v /= ksum;

  const auto nx = static_cast<std::ptrdiff_t>(img.x.n);
  const auto ny = static_cast<std::ptrdiff_t>(img.y.n);
  DensityImage tmp = img;
  parallel_for(0, img.y.n, [&](std::size_t iy) {
    for (std::ptrdiff_t ix = 0; ix < nx; ++ix) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -half; d <= half; ++d) {
        const auto j = ix - d;
        if (j >= 0 && j < nx) acc += kernel[static_cast<std::size_t>(d + half)] * img.at(static_cast<std::size_t>(j), iy);
      }
      tmp.at(static_cast<std::size_t>(ix), iy) = acc;
    }
  });
  DensityImage out = tmp;
  parallel_for(0, img.x.n, [&](std::size_t ix) {
    for (std::ptrdiff_t iy = 0; iy < ny; ++iy) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -half; d <= half; ++d) {
        const auto j = iy - d;
        if (j >= 0 && j < ny) acc += kernel[static_cast<std::size_t>(d + half)] * tmp.at(ix, static_cast<std::size_t>(j));
      }
      out.at(ix, static_cast<std::size_t>(iy)) = acc;
    }
  });
  return out;
}

void add_image_noise(DensityImage& img, double rms, std::uint64_t seed, std::uint64_t image_index) {
  if (!(rms >= 0.0)) throw InputError("add_image_noise: rms must be >= 0");
  CounterRng rng(derive_key(seed, kNoiseStream, image_index));
  for (double& v : img.values) v += rms * rng.normal();
}

double peak_value(const DensityImage& img) {
  double m = 0.0;
  for (double v : img.values) m = std::max(m, v);
  return m;
}

Profile column_integrate(const DensityImage& img) {
  img.validate();
  Profile prof{img.x, std::vector<double>(img.x.n, 0.0), 0.0};
  for (std::size_t iy = 0; iy < img.y.n; ++iy) {
    for (std::size_t ix = 0; ix < img.x.n; ++ix) prof.values[ix] += img.at(ix, iy);
  }
  double negative = 0.0;
  double absolute = 0.0;
  for (double& v : prof.values) {
    absolute += std::abs(v);
    if (v < 0.0) {
      negative -= v;
      v = 0.0;
    }
  }
  double sum = 0.0;
  for (double v : prof.values) sum += v;
  if (!(sum > 0.0)) throw InputError("column_integrate: image has no positive signal");
  prof.clipped_fraction = negative / absolute;
  for (double& v : prof.values) v /= sum * prof.x.step();
  return prof;
}

Sinogram ingest_projection_stack(const std::vector<ProjectionProfile>& profiles) {
  if (profiles.empty()) throw InputError("ingest_projection_stack: no profiles");
  const UniformAxis& axis = profiles.front().x;
  axis.validate();
  struct Accum {
    std::vector<double> sum;
    std::size_t count = 0;
  };
  std::map<double, Accum> by_angle;
  for (const auto& pr : profiles) {
    if (!std::isfinite(pr.theta) || pr.theta < 0.0 || pr.theta >= constants::pi) {
      throw InputError("ingest_projection_stack: angle outside [0, pi)");
    }
    if (!(pr.x == axis) || pr.values.size() != axis.n) {
      throw InputError("ingest_projection_stack: profiles use different x grids");
    }
    auto& acc = by_angle[pr.theta];
    if (acc.sum.empty()) acc.sum.assign(axis.n, 0.0);
    for (std::size_t j = 0; j < axis.n; ++j) acc.sum[j] += pr.values[j];
    acc.count += 1;
  }
  if (by_angle.size() < 2) throw InputError("ingest_projection_stack: need at least two distinct angles");

  Sinogram sino;
  sino.x = axis;
  sino.normalized = true;
  for (auto& [theta, acc] : by_angle) {
    sino.angles.push_back(theta);
    double total = 0.0;
    for (double& v : acc.sum) {
      v = std::max(0.0, v / static_cast<double>(acc.count));
      total += v;
    }
    if (!(total > 0.0)) throw InputError("ingest_projection_stack: empty projection");
    for (double v : acc.sum) sino.values.push_back(v / (total * axis.step()));
  }
  sino.validate();
  return sino;
}

}  // namespace phasetomo
