#include "phasetomo/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "phasetomo/error.hpp"
#include "phasetomo/parallel.hpp"

namespace phasetomo {

using constants::pi;

void Sinogram::validate() const {
  x.validate();
  if (angles.empty()) throw InputError("sinogram has no angles");
  if (values.size() != angles.size() * x.n) throw InputError("sinogram value count does not match its shape");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!std::isfinite(angles[i]) || angles[i] < 0.0 || angles[i] >= pi) {
      throw InputError("sinogram angles must lie in [0, pi)");
    }
    if (i > 0 && !(angles[i] > angles[i - 1])) throw InputError("sinogram angles must be strictly increasing");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw InputError("sinogram values must be finite and nonnegative");
  }
  if (normalized) {
    for (std::size_t i = 0; i < angles.size(); ++i) {
      double sum = 0.0;
      for (double v : projection(i)) sum += v;
      if (std::abs(sum * x.step() - 1.0) > 1e-6) throw InputError("sinogram projection is not normalized");
    }
  }
}

std::vector<double> uniform_angles(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = pi * static_cast<double>(k) / static_cast<double>(n);
  return out;
}

namespace {

void normalize_profile(std::vector<double>& v, double dx) {
  double sum = 0.0;
  for (double a : v) sum += a;
  if (sum != 0.0 && std::isfinite(sum)) {
    for (double& a : v) a /= sum * dx;
  }
}

}  // namespace

std::vector<double> project(const PhaseSpaceGrid& grid, double theta, const UniformAxis& x_axis) {
  grid.validate();
  x_axis.validate();
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  double reach = 0.0;
  for (double qv : {grid.q.min, grid.q.max}) {
    for (double pv : {grid.p.min, grid.p.max}) reach = std::max(reach, std::hypot(qv, pv));
  }
  const double ds = 0.5 * std::min(grid.q.step(), grid.p.step());
  const auto n_s = static_cast<std::size_t>(std::ceil(2.0 * reach / ds));
  std::vector<double> out(x_axis.n, 0.0);
  parallel_for(0, x_axis.n, [&](std::size_t j) {
    const double xv = x_axis.center(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < n_s; ++k) {
      const double t = -reach + (static_cast<double>(k) + 0.5) * ds;
      acc += grid.interpolate(xv * c - t * s, xv * s + t * c);
    }
    out[j] = acc * ds;
  });
  normalize_profile(out, x_axis.step());
  return out;
}

std::vector<double> project(const Ensemble& ens, double theta, const UniformAxis& x_axis, double center) {
  if (ens.size() == 0) throw InputError("project: empty ensemble");
  ens.validate();
  x_axis.validate();
  const double scale = ens.params.momentum_scale();
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  std::vector<double> out(x_axis.n, 0.0);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double v = (ens.x[i] - center) * c + (ens.p[i] / scale) * s;
    const double f = x_axis.fractional_index(v);
    if (f < 0.0 || f >= static_cast<double>(x_axis.n)) continue;
    out[static_cast<std::size_t>(f)] += 1.0;
  }
  normalize_profile(out, x_axis.step());
  return out;
}

Sinogram make_sinogram(const PhaseSpaceGrid& grid, const std::vector<double>& angles, const UniformAxis& x_axis) {
  Sinogram sino{angles, x_axis, {}, true};
  sino.values.reserve(angles.size() * x_axis.n);
  for (double th : angles) {
    const auto row = project(grid, th, x_axis);
    sino.values.insert(sino.values.end(), row.begin(), row.end());
  }
  return sino;
}

Sinogram make_sinogram(const Ensemble& ens, const std::vector<double>& angles, const UniformAxis& x_axis,
                       double center) {
  Sinogram sino{angles, x_axis, {}, true};
  sino.values.reserve(angles.size() * x_axis.n);
  for (double th : angles) {
    const auto row = project(ens, th, x_axis, center);
    sino.values.insert(sino.values.end(), row.begin(), row.end());
  }
  return sino;
}

double kernel_K(double x, double k_c) {
  if (!(k_c > 0.0)) throw InputError("kernel_K: k_c must be > 0");
  const double ax = std::abs(x);
  const double kx = k_c * ax;
  if (kx > 0.1) return (std::cos(kx) + kx * std::sin(kx) - 1.0) / (ax * ax);
  const double k2 = kx * kx;
  return 0.5 * k_c * k_c * (1.0 - k2 / 4.0 + k2 * k2 / 72.0);
}

FbpResult fbp_reconstruct(const Sinogram& sino, double k_c, const UniformAxis& q_axis, const UniformAxis& p_axis) {
  sino.validate();
  if (sino.n_angles() < 2) throw InputError("fbp_reconstruct: need at least two angles");
  if (!(k_c > 0.0)) throw InputError("fbp_reconstruct: k_c must be > 0");

  const std::size_t nx = sino.x.n;
  const double dx = sino.x.step();
  std::vector<double> xs(nx);
  std::vector<double> cos_kx(nx);
  std::vector<double> sin_kx(nx);
  for (std::size_t j = 0; j < nx; ++j) {
    xs[j] = sino.x.center(j);
    cos_kx[j] = std::cos(k_c * xs[j]);
    sin_kx[j] = std::sin(k_c * xs[j]);
  }

  // Trapezoid-weighted samples; zero bins are dropped from the inner loop.
  struct Tap {
    std::size_t j;
    double weight;
  };
  std::vector<std::vector<Tap>> taps(sino.n_angles());
  for (std::size_t i = 0; i < sino.n_angles(); ++i) {
    const auto row = sino.projection(i);
    for (std::size_t j = 0; j < nx; ++j) {
      if (row[j] == 0.0) continue;
      const double w = (j == 0 || j + 1 == nx) ? 0.5 * dx : dx;
      taps[i].push_back({j, w * row[j]});
    }
  }
  std::vector<double> ct(sino.n_angles());
  std::vector<double> st(sino.n_angles());
  for (std::size_t i = 0; i < sino.n_angles(); ++i) {
    ct[i] = std::cos(sino.angles[i]);
    st[i] = std::sin(sino.angles[i]);
  }

  const double prefactor = 1.0 / (2.0 * pi * pi) * (pi / static_cast<double>(sino.n_angles()));
  const double k2_half = 0.5 * k_c * k_c;
  FbpResult result;
  result.raw = PhaseSpaceGrid(q_axis, p_axis, true);
  auto& raw = result.raw;
  parallel_for(0, p_axis.n, [&](std::size_t ip) {
    const double pv = p_axis.center(ip);
    for (std::size_t iq = 0; iq < q_axis.n; ++iq) {
      const double qv = q_axis.center(iq);
      double total = 0.0;
      for (std::size_t i = 0; i < sino.n_angles(); ++i) {
        const double s = qv * ct[i] + pv * st[i];
        const double cks = std::cos(k_c * s);
        const double sks = std::sin(k_c * s);
        double acc = 0.0;
        for (const auto& tap : taps[i]) {
          const double d = s - xs[tap.j];
          const double kd = k_c * d;
          double kernel;
          if (std::abs(kd) > 0.1) {
            // cos/sin of k(s − x) from the separable angle-difference identities.
            const double c = cks * cos_kx[tap.j] + sks * sin_kx[tap.j];
            const double sn = sks * cos_kx[tap.j] - cks * sin_kx[tap.j];
            kernel = (c + kd * sn - 1.0) / (d * d);
          } else {
            const double z = kd * kd;
            kernel = k2_half * (1.0 - z / 4.0 + z * z / 72.0);
          }
          acc += kernel * tap.weight;
        }
        total += acc;
      }
      raw.at(iq, ip) = prefactor * total;
    }
  });

  double positive = 0.0;
  for (double v : raw.values) positive += std::max(v, 0.0);
  if (positive > 0.0) {
    result.clipped = clip_and_normalize(raw, &result.clipped_fraction);
  } else {
    result.clipped = PhaseSpaceGrid(q_axis, p_axis, false);
    result.clipped_fraction = 0.0;
  }
  return result;
}

namespace {

struct Footprint {
  std::ptrdiff_t j0;
  double t;
};

Footprint footprint(const UniformAxis& x, double s) {
  const double f = x.fractional_index(s) - 0.5;
  const double j0 = std::floor(f);
  return {static_cast<std::ptrdiff_t>(j0), f - j0};
}

void forward_into(const PhaseSpaceGrid& grid, const std::vector<double>& angles, const UniformAxis& x_axis,
                  std::vector<double>& out) {
  const std::size_t nx = x_axis.n;
  out.assign(angles.size() * nx, 0.0);
  const double weight = grid.cell_area() / x_axis.step();
  const auto n = static_cast<std::ptrdiff_t>(nx);
  parallel_for(0, angles.size(), [&](std::size_t i) {
    const double c = std::cos(angles[i]);
    const double s = std::sin(angles[i]);
    double* row = out.data() + i * nx;
    for (std::size_t ip = 0; ip < grid.np(); ++ip) {
      const double pv = grid.p.center(ip);
      for (std::size_t iq = 0; iq < grid.nq(); ++iq) {
        const double v = grid.at(iq, ip);
        if (v == 0.0) continue;
        const auto fp = footprint(x_axis, grid.q.center(iq) * c + pv * s);
        if (fp.j0 >= 0 && fp.j0 < n) row[fp.j0] += weight * (1.0 - fp.t) * v;
        if (fp.j0 + 1 >= 0 && fp.j0 + 1 < n) row[fp.j0 + 1] += weight * fp.t * v;
      }
    }
  });
}

// Adjoint of forward_into, gathered per cell.
void backproject_into(const std::vector<double>& data, const std::vector<double>& angles, const UniformAxis& x_axis,
                      PhaseSpaceGrid& out) {
  const std::size_t nx = x_axis.n;
  const double weight = out.cell_area() / x_axis.step();
  const auto n = static_cast<std::ptrdiff_t>(nx);
  std::vector<double> ct(angles.size());
  std::vector<double> st(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    ct[i] = std::cos(angles[i]);
    st[i] = std::sin(angles[i]);
  }
  parallel_for(0, out.np(), [&](std::size_t ip) {
    const double pv = out.p.center(ip);
    for (std::size_t iq = 0; iq < out.nq(); ++iq) {
      const double qv = out.q.center(iq);
      double acc = 0.0;
      for (std::size_t i = 0; i < angles.size(); ++i) {
        const double* row = data.data() + i * nx;
        const auto fp = footprint(x_axis, qv * ct[i] + pv * st[i]);
        if (fp.j0 >= 0 && fp.j0 < n) acc += (1.0 - fp.t) * row[fp.j0];
        if (fp.j0 + 1 >= 0 && fp.j0 + 1 < n) acc += fp.t * row[fp.j0 + 1];
      }
      out.at(iq, ip) = weight * acc;
    }
  });
}

double kl_rows(const std::vector<double>& measured, const std::vector<double>& model, std::size_t n_angles,
               double dx) {
  double total = 0.0;
  for (std::size_t k = 0; k < measured.size(); ++k) {
    const double m = measured[k];
    const double f = std::max(model[k], 1e-300);
    total += (m > 0.0 ? m * std::log(m / f) : 0.0) - m + f;
  }
  return total * dx / static_cast<double>(n_angles);
}

}  // namespace

Sinogram mlem_forward(const PhaseSpaceGrid& grid, const std::vector<double>& angles, const UniformAxis& x_axis) {
  Sinogram out{angles, x_axis, {}, false};
  forward_into(grid, angles, x_axis, out.values);
  return out;
}

double mean_kl_divergence(const Sinogram& measured, const Sinogram& model) {
  if (measured.values.size() != model.values.size() || !(measured.x == model.x)) {
    throw InputError("mean_kl_divergence: sinogram shapes differ");
  }
  return kl_rows(measured.values, model.values, measured.n_angles(), measured.x.step());
}

MlemResult mlem_reconstruct(const Sinogram& sino, std::size_t n_iter, const UniformAxis& q_axis,
                            const UniformAxis& p_axis) {
  sino.validate();
  if (n_iter < 1) throw InputError("mlem_reconstruct: n_iter must be >= 1");

  PhaseSpaceGrid sensitivity(q_axis, p_axis);
  backproject_into(std::vector<double>(sino.values.size(), 1.0), sino.angles, sino.x, sensitivity);

  MlemResult result;
  result.grid = PhaseSpaceGrid(q_axis, p_axis);
  auto& est = result.grid;
  double support_area = 0.0;
  for (double s : sensitivity.values) support_area += s > 0.0 ? est.cell_area() : 0.0;
  if (!(support_area > 0.0)) throw InputError("mlem_reconstruct: output grid does not intersect the projections");
  for (std::size_t c = 0; c < est.values.size(); ++c) {
    est.values[c] = sensitivity.values[c] > 0.0 ? 1.0 / support_area : 0.0;
  }

  std::vector<double> model;
  std::vector<double> ratio(sino.values.size());
  PhaseSpaceGrid correction(q_axis, p_axis);
  for (std::size_t it = 0; it < n_iter; ++it) {
    forward_into(est, sino.angles, sino.x, model);
    for (std::size_t k = 0; k < ratio.size(); ++k) {
      ratio[k] = model[k] > 0.0 ? sino.values[k] / model[k] : 0.0;
    }
    backproject_into(ratio, sino.angles, sino.x, correction);
    for (std::size_t c = 0; c < est.values.size(); ++c) {
      const double s = sensitivity.values[c];
      est.values[c] = s > 0.0 ? est.values[c] * correction.values[c] / s : 0.0;
    }
    forward_into(est, sino.angles, sino.x, model);
    result.kl_history.push_back(kl_rows(sino.values, model, sino.n_angles(), sino.x.step()));
  }
  return result;
}

double arc_width_from_resultant(double resultant_length) {
  if (!(resultant_length < 1.0)) return 0.0;
  if (!(resultant_length > 0.0)) return 2.0 * pi;
  double lo = 0.0;
  double hi = 2.0 * pi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * mid;
    const double sinc = std::sin(half) / half;
    if (sinc > resultant_length) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

GridMetrics grid_metrics(const PhaseSpaceGrid& grid, double support_fraction) {
  if (!(support_fraction >= 0.0 && support_fraction < 1.0)) {
    throw InputError("grid_metrics: support_fraction must be in [0, 1)");
  }
  double positive = 0.0;
  double peak = 0.0;
  for (double v : grid.values) {
    positive += std::max(v, 0.0);
    peak = std::max(peak, v);
  }
  if (!(positive > 0.0)) throw InputError("grid_metrics: grid has no positive mass");
  PhaseSpaceGrid masked = grid;
  for (double& v : masked.values) {
    if (v < support_fraction * peak) v = 0.0;
  }
  const auto g = clip_and_normalize(masked);
  const double area = g.cell_area();

  GridMetrics m;
  std::complex<double> phasor{0.0, 0.0};
  constexpr std::size_t kAngleBins = 720;
  std::vector<double> by_angle(kAngleBins, 0.0);
  for (std::size_t ip = 0; ip < g.np(); ++ip) {
    const double pv = g.p.center(ip);
    for (std::size_t iq = 0; iq < g.nq(); ++iq) {
      const double w = g.at(iq, ip) * area;
      const double qv = g.q.center(iq);
      m.mean_q += w * qv;
      m.mean_p += w * pv;
      const double r = std::hypot(qv, pv);
      if (r > 0.0) phasor += w * std::complex<double>(qv / r, pv / r);
      const double u = (std::atan2(pv, qv) + pi) / (2.0 * pi);
      by_angle[std::min(kAngleBins - 1, static_cast<std::size_t>(u * kAngleBins))] += w;
    }
  }
  for (std::size_t ip = 0; ip < g.np(); ++ip) {
    const double dp = g.p.center(ip) - m.mean_p;
    for (std::size_t iq = 0; iq < g.nq(); ++iq) {
      const double w = g.at(iq, ip) * area;
      const double dq = g.q.center(iq) - m.mean_q;
      m.var_q += w * dq * dq;
      m.var_p += w * dp * dp;
      m.cov_qp += w * dq * dp;
    }
  }
  const double tr = 0.5 * (m.var_q + m.var_p);
  const double disc = std::sqrt(std::max(0.0, 0.25 * (m.var_q - m.var_p) * (m.var_q - m.var_p) + m.cov_qp * m.cov_qp));
  m.sigma_major = std::sqrt(tr + disc);
  m.sigma_minor = std::sqrt(std::max(0.0, tr - disc));
  m.anisotropy = m.sigma_minor > 0.0 ? m.sigma_major / m.sigma_minor : std::numeric_limits<double>::infinity();
  m.resultant_length = std::min(1.0, std::abs(phasor));
  m.circular_std = m.resultant_length > 0.0 ? std::sqrt(-2.0 * std::log(m.resultant_length))
                                            : std::numeric_limits<double>::infinity();
  m.arc_equivalent_width = arc_width_from_resultant(m.resultant_length);
  m.angular_spread = minimal_arc(by_angle, 0.9);
  return m;
}

double minimal_arc(std::span<const double> h, double fraction) {
  if (h.empty() || !(fraction > 0.0 && fraction <= 1.0)) throw InputError("minimal_arc: bad arguments");
  const std::size_t n = h.size();
  double total = 0.0;
  for (double v : h) total += v;
  if (!(total > 0.0)) throw InputError("minimal_arc: empty histogram");
  const double need = fraction * total * (1.0 - 1e-12);
  // Two pointers over the doubled circle.
  std::size_t best = n;
  double acc = 0.0;
  std::size_t end = 0;
  for (std::size_t start = 0; start < n; ++start) {
    while (end < start + n && acc < need) acc += h[end++ % n];
    if (acc >= need) best = std::min(best, end - start);
    acc -= h[start];
  }
  return 2.0 * pi * static_cast<double>(best) / static_cast<double>(n);
}

double overlap(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b) {
  if (!a.same_axes(b)) throw InputError("overlap: grids have different axes");
  const auto na = clip_and_normalize(a);
  const auto nb = clip_and_normalize(b);
  double acc = 0.0;
  for (std::size_t k = 0; k < na.values.size(); ++k) acc += std::sqrt(na.values[k] * nb.values[k]);
  return acc * na.cell_area();
}

PhaseSpaceGrid bin_ensemble(const Ensemble& ens, const UniformAxis& q_axis, const UniformAxis& p_axis,
                            double center) {
  ens.validate();
  PhaseSpaceGrid out(q_axis, p_axis);
  const double scale = ens.params.momentum_scale();
  const auto nq = static_cast<std::ptrdiff_t>(q_axis.n);
  const auto np = static_cast<std::ptrdiff_t>(p_axis.n);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double fq = q_axis.fractional_index(ens.x[i] - center) - 0.5;
    const double fp = p_axis.fractional_index(ens.p[i] / scale) - 0.5;
    const auto iq = static_cast<std::ptrdiff_t>(std::floor(fq));
    const auto ip = static_cast<std::ptrdiff_t>(std::floor(fp));
    const double tq = fq - static_cast<double>(iq);
    const double tp = fp - static_cast<double>(ip);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const auto jq = iq + a;
        const auto jp = ip + b;
        if (jq < 0 || jq >= nq || jp < 0 || jp >= np) continue;
        const double w = (a ? tq : 1.0 - tq) * (b ? tp : 1.0 - tp);
        out.at(static_cast<std::size_t>(jq), static_cast<std::size_t>(jp)) += w;
      }
    }
  }
  const double mass = out.total_mass();
  if (mass > 0.0) {
    for (double& v : out.values) v /= mass;
  }
  return out;
}

}  // namespace phasetomo
