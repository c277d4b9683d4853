#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "phasetomo/dynamics.hpp"
#include "phasetomo/ensemble.hpp"
#include "phasetomo/error.hpp"
#include "phasetomo/phase_space_grid.hpp"
#include "phasetomo/rng.hpp"
#include "phasetomo/tomography.hpp"

using namespace phasetomo;

namespace {

PhaseSpaceGrid gaussian_grid(double sq, double sp, double rho, double half = 60e-6, std::size_t n = 96) {
  PhaseSpaceGrid g(symmetric_axis(half, n), symmetric_axis(half, n));
  const double det = sq * sq * sp * sp * (1 - rho * rho);
  for (std::size_t ip = 0; ip < n; ++ip)
    for (std::size_t iq = 0; iq < n; ++iq) {
      const double q = g.q.center(iq), p = g.p.center(ip);
      const double quad = (sp * sp * q * q - 2 * rho * sq * sp * q * p + sq * sq * p * p) / det;
      g.at(iq, ip) = std::exp(-0.5 * quad);
    }
  const double m = g.total_mass();
  for (double& v : g.values) v /= m;
  return g;
}

Sinogram analytic_sinogram(double s, std::size_t n_angles, const UniformAxis& x) {
  Sinogram sino;
  sino.angles = uniform_angles(n_angles);
  sino.x = x;
  for (std::size_t i = 0; i < n_angles; ++i)
    for (std::size_t j = 0; j < x.n; ++j) sino.values.push_back(oracle::gauss1d(x.center(j), s));
  return sino;
}

}  // namespace

TEST_CASE("kernel is even, matches the closed form and its origin value") {
  const double kc = 0.43e6;
  for (double x : {1e-9, 1e-7, 0.1 / kc, 0.1 / kc * (1 + 1e-9), 3e-6, 40e-6}) {
    CHECK(kernel_K(x, kc) == kernel_K(-x, kc));
    const double ref = static_cast<double>(oracle::kernel(x, kc));
    CHECK(kernel_K(x, kc) == doctest::Approx(ref).epsilon(1e-6));
  }
  CHECK(kernel_K(0.0, kc) == doctest::Approx(kc * kc / 2).epsilon(1e-15));
  CHECK_THROWS_AS(kernel_K(1.0, 0.0), InputError);
}

TEST_CASE("uniform angles and sinogram validation") {
  auto a = uniform_angles(13);
  REQUIRE(a.size() == 13);
  CHECK(a[0] == 0.0);
  CHECK(a[1] == doctest::Approx(constants::pi / 13));
  CHECK(a.back() < constants::pi);

  auto s = analytic_sinogram(10e-6, 4, symmetric_axis(80e-6, 64));
  s.validate();
  auto bad = s;
  std::swap(bad.angles[0], bad.angles[1]);
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = s;
  bad.values[3] = -1;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = s;
  bad.values.pop_back();
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = s;
  bad.normalized = true;
  bad.values[32] *= 3;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("projection of a grid equals its Radon marginal") {
  const double sq = 12e-6, sp = 7e-6;
  auto g = gaussian_grid(sq, sp, 0.0);
  auto x = symmetric_axis(60e-6, 120);
  for (double th : {0.0, 0.4, 1.3, 2.9}) {
    auto pr = project(g, th, x);
    const double s = std::sqrt(sq * sq * std::cos(th) * std::cos(th) + sp * sp * std::sin(th) * std::sin(th));
    double err = 0, ref = 0;
    for (std::size_t j = 0; j < x.n; ++j) {
      err += std::abs(pr[j] - oracle::gauss1d(x.center(j), s));
      ref += oracle::gauss1d(x.center(j), s);
    }
    CHECK(err / ref < 0.02);
  }
}

TEST_CASE("ensemble projection is a normalized histogram of the rotated coordinate") {
  PhysicalParams pp;
  auto e = sample_ensemble(pp, 0.0, 20000, 4);
  auto x = symmetric_axis(100e-6, 50);
  auto pr = project(e, 0.8, x);
  CHECK(std::accumulate(pr.begin(), pr.end(), 0.0) * x.step() == doctest::Approx(1.0).epsilon(1e-3));
  const double s = std::sqrt(pp.kT() / (pp.mass * pp.omega0 * pp.omega0));
  CHECK(pr[25] == doctest::Approx(oracle::gauss1d(x.center(25), s)).epsilon(0.06));
  Ensemble empty;
  CHECK_THROWS_AS(project(empty, 0.0, x), InputError);
}

TEST_CASE("filtered back-projection recovers an isotropic Gaussian") {
  const double s = 15e-6;
  auto x = symmetric_axis(150e-6, 150);
  auto sino = analytic_sinogram(s, 26, x);
  auto axis = symmetric_axis(150e-6, 128);
  auto r = fbp_reconstruct(sino, 0.43e6, axis, axis);
  double num = 0, den = 0;
  for (std::size_t ip = 0; ip < axis.n; ++ip)
    for (std::size_t iq = 0; iq < axis.n; ++iq) {
      const double ref = oracle::gauss2d(axis.center(iq), axis.center(ip), s);
      num += std::pow(r.raw.at(iq, ip) - ref, 2);
      den += ref * ref;
    }
  CHECK(std::sqrt(num / den) < 0.05);
  CHECK(grid_metrics(r.clipped, 0.1).anisotropy == doctest::Approx(1.0).epsilon(0.05));
  CHECK(r.clipped.total_mass() == doctest::Approx(1.0));
  CHECK_THROWS_AS(fbp_reconstruct(analytic_sinogram(s, 1, x), 0.43e6, axis, axis), InputError);
}

TEST_CASE("MLEM keeps positivity, mass and decreases the divergence") {
  const double s = 15e-6;
  auto x = symmetric_axis(150e-6, 150);
  auto sino = analytic_sinogram(s, 13, x);
  auto axis = symmetric_axis(150e-6, 64);
  auto r = mlem_reconstruct(sino, 30, axis, axis);
  for (double v : r.grid.values) CHECK(v >= 0.0);
  CHECK(r.grid.total_mass() == doctest::Approx(1.0).epsilon(0.05));
  REQUIRE(r.kl_history.size() == 30);
  for (std::size_t i = 1; i < r.kl_history.size(); ++i) CHECK(r.kl_history[i] <= r.kl_history[i - 1] * (1 + 1e-9));
  auto m = grid_metrics(r.grid, 0.1);
  CHECK(m.anisotropy == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::sqrt(m.var_q) == doctest::Approx(s).epsilon(0.1));
}

TEST_CASE("grid metrics of an anisotropic Gaussian") {
  const double sq = 14e-6, sp = 7e-6;
  auto g = gaussian_grid(sq, sp, 0.0);
  auto m = grid_metrics(g);
  CHECK(m.sigma_major == doctest::Approx(sq).epsilon(0.01));
  CHECK(m.sigma_minor == doctest::Approx(sp).epsilon(0.01));
  CHECK(m.anisotropy == doctest::Approx(2.0).epsilon(0.02));
  CHECK(std::abs(m.mean_q) < 1e-8);

  // metrics are rotation covariant
  auto rot = phase_rotation(g, 0.6);
  auto mr = grid_metrics(rot);
  CHECK(mr.anisotropy == doctest::Approx(m.anisotropy).epsilon(0.02));
  CHECK(std::abs(mr.cov_qp) > 1e-12);

  PhaseSpaceGrid zero(symmetric_axis(1, 4), symmetric_axis(1, 4));
  CHECK_THROWS_AS(grid_metrics(zero), InputError);
}

TEST_CASE("minimal arc and arc width") {
  std::vector<double> h(360, 0.0);
  for (int i = 350; i < 360; ++i) h[i] = 1;
  for (int i = 0; i < 10; ++i) h[i] = 1;  // wraps around
  CHECK(minimal_arc(h, 1.0) == doctest::Approx(20 * 2 * constants::pi / 360));
  CHECK(minimal_arc(h, 0.5) == doctest::Approx(10 * 2 * constants::pi / 360));

  for (double w : {0.3, 1.5, 2.85, 4.0}) {
    const double R = std::sin(w / 2) / (w / 2);
    CHECK(arc_width_from_resultant(R) == doctest::Approx(w).epsilon(1e-8));
  }
}

TEST_CASE("overlap and binning") {
  PhysicalParams pp;
  auto e = sample_ensemble(pp, 20e-6, 5000, 6);
  auto axis = symmetric_axis(100e-6, 64);
  auto g = bin_ensemble(e, axis, axis);
  CHECK(g.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(overlap(g, g) == doctest::Approx(1.0).epsilon(1e-12));
  auto shifted = bin_ensemble(phase_rotation(e, constants::pi), axis, axis);
  CHECK(overlap(g, shifted) < 0.9);
  PhaseSpaceGrid other(symmetric_axis(90e-6, 64), axis);
  CHECK_THROWS_AS(overlap(g, other), InputError);
}

namespace {

// Sinogram of a phase-space grid at uniform angles, not normalized.
Sinogram grid_sinogram(const PhaseSpaceGrid& g, std::size_t n, const UniformAxis& x) {
  Sinogram s;
  s.angles = uniform_angles(n);
  s.x = x;
  for (double th : s.angles) {
    auto pr = project(g, th, x);
    s.values.insert(s.values.end(), pr.begin(), pr.end());
  }
  return s;
}

double rel_l2(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    num += std::pow(a.values[i] - b.values[i], 2);
    den += b.values[i] * b.values[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("kernel reference values") {
  const double kc = 0.43e6;
  CHECK(kernel_K(0.0, kc) * 1e-12 == doctest::Approx(0.09245).epsilon(1e-4));
  const double x = constants::pi / kc;
  CHECK(kernel_K(x, kc) == doctest::Approx(-2.0 / (x * x)).epsilon(1e-12));
}

TEST_CASE("isotropic projections do not depend on the angle") {
  auto g = gaussian_grid(10e-6, 10e-6, 0.0);
  auto x = symmetric_axis(60e-6, 80);
  auto ref = project(g, 0.0, x);
  for (double th : {0.3, 1.1, 2.2}) {
    auto pr = project(g, th, x);
    double l1 = 0;
    for (std::size_t j = 0; j < x.n; ++j) l1 += std::abs(pr[j] - ref[j]) * x.step();
    CHECK(l1 < 5e-3);
  }
  // θ = 0 is the plain marginal over p̄
  auto axis_q = g.q;
  auto pr0 = project(g, 0.0, axis_q);
  for (std::size_t iq = 0; iq < axis_q.n; ++iq) {
    double m = 0;
    for (std::size_t ip = 0; ip < g.np(); ++ip) m += g.at(iq, ip) * g.p.step();
    CHECK(pr0[iq] == doctest::Approx(m).epsilon(1e-9).scale(1e-3));
  }
}

TEST_CASE("ensemble and binned-grid projections agree") {
  PhysicalParams pp;
  auto e = sample_ensemble(pp, 30e-6, 100000, 21);
  auto axis = symmetric_axis(120e-6, 120);
  auto g = bin_ensemble(e, axis, axis);
  auto x = symmetric_axis(120e-6, 60);
  for (double th : {0.0, 0.9, 2.4}) {
    auto a = project(e, th, x);
    auto b = project(g, th, x);
    double l1 = 0;
    for (std::size_t j = 0; j < x.n; ++j) l1 += std::abs(a[j] - b[j]) * x.step();
    CHECK(l1 < 0.05);
  }
}

TEST_CASE("back-projection of a point mass peaks at the point") {
  auto x = symmetric_axis(100e-6, 200);
  const double q0 = 40e-6;
  Sinogram s;
  s.angles = uniform_angles(32);
  s.x = x;
  for (double th : s.angles) {
    std::vector<double> row(x.n, 0.0);
    const double pos = q0 * std::cos(th);
    row[static_cast<std::size_t>(x.fractional_index(pos))] = 1.0 / x.step();
    s.values.insert(s.values.end(), row.begin(), row.end());
  }
  auto axis = symmetric_axis(100e-6, 100);
  auto r = fbp_reconstruct(s, 0.43e6, axis, axis);
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.raw.values.size(); ++i)
    if (r.raw.values[i] > r.raw.values[best]) best = i;
  const double qb = axis.center(best % axis.n), pb = axis.center(best / axis.n);
  CHECK(std::abs(qb - q0) <= axis.step());
  CHECK(std::abs(pb) <= axis.step());

  Sinogram zero = s;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  auto z = fbp_reconstruct(zero, 0.43e6, axis, axis);
  for (double v : z.raw.values) CHECK(v == 0.0);
}

TEST_CASE("filtered back-projection is linear") {
  auto x = symmetric_axis(80e-6, 80);
  auto s1 = grid_sinogram(gaussian_grid(10e-6, 6e-6, 0.3), 13, x);
  auto s2 = grid_sinogram(gaussian_grid(4e-6, 12e-6, -0.2), 13, x);
  Sinogram mix = s1;
  for (std::size_t i = 0; i < mix.values.size(); ++i) mix.values[i] = 2.5 * s1.values[i] + 0.75 * s2.values[i];
  auto axis = symmetric_axis(60e-6, 48);
  auto r1 = fbp_reconstruct(s1, 0.43e6, axis, axis).raw;
  auto r2 = fbp_reconstruct(s2, 0.43e6, axis, axis).raw;
  auto rm = fbp_reconstruct(mix, 0.43e6, axis, axis).raw;
  double scale = 0;
  for (double v : rm.values) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < rm.values.size(); ++i)
    CHECK(std::abs(rm.values[i] - (2.5 * r1.values[i] + 0.75 * r2.values[i])) <= 1e-10 * scale);
}

TEST_CASE("shifting sinogram angles rotates the reconstruction") {
  const std::size_t n = 26;
  auto x = symmetric_axis(80e-6, 160);
  auto g = gaussian_grid(14e-6, 6e-6, 0.4, 60e-6, 96);
  auto base = grid_sinogram(g, n, x);
  const std::size_t m = 5;  // shift by m·π/n
  Sinogram shifted = base;
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = shifted.projection(i);
    if (i >= m) {
      auto src = base.projection(i - m);
      std::copy(src.begin(), src.end(), dst.begin());
    } else {
      // θ − δ < 0 wraps to θ − δ + π with x reversed
      auto src = base.projection(i + n - m);
      std::copy(src.rbegin(), src.rend(), dst.begin());
    }
  }
  auto axis = symmetric_axis(60e-6, 96);
  auto r = fbp_reconstruct(base, 0.43e6, axis, axis).raw;
  auto rs = fbp_reconstruct(shifted, 0.43e6, axis, axis).raw;
  auto rot = phase_rotation(r, m * constants::pi / n);
  CHECK(rel_l2(rs, rot) < 0.02);
}

TEST_CASE("project then reconstruct round trip on a smooth grid") {
  auto g = gaussian_grid(14e-6, 9e-6, 0.3, 60e-6, 64);
  auto x = symmetric_axis(90e-6, 120);
  auto r = fbp_reconstruct(grid_sinogram(g, 13, x), 0.43e6, g.q, g.p).raw;
  CHECK(rel_l2(r, g) < 0.10);
}

TEST_CASE("MLEM details") {
  // uniform disk of radius 30 µm
  auto axis = symmetric_axis(60e-6, 48);
  PhaseSpaceGrid disk(axis, axis);
  for (std::size_t ip = 0; ip < axis.n; ++ip)
    for (std::size_t iq = 0; iq < axis.n; ++iq)
      disk.at(iq, ip) = std::hypot(axis.center(iq), axis.center(ip)) < 30e-6 ? 1.0 : 0.0;
  auto x = symmetric_axis(60e-6, 60);
  auto sino = mlem_forward(disk, uniform_angles(13), x);
  auto r = mlem_reconstruct(sino, 50, axis, axis);
  CHECK(r.kl_history.back() < 1e-3);
  CHECK(*std::min_element(r.grid.values.begin(), r.grid.values.end()) >= 0.0);
  CHECK_THROWS_AS(mlem_reconstruct(sino, 0, axis, axis), InputError);

  // one step from a flat start is the back-projection of measured/forward(flat), over the sensitivity
  auto small = symmetric_axis(60e-6, 16);
  auto xs = symmetric_axis(60e-6, 20);
  auto gauss = gaussian_grid(15e-6, 10e-6, 0.2, 60e-6, 16);
  auto meas = mlem_forward(gauss, uniform_angles(13), xs);
  PhaseSpaceGrid flat(small, small);
  std::fill(flat.values.begin(), flat.values.end(), 1.0);
  auto f0 = mlem_forward(flat, meas.angles, xs);
  // adjoint via unit-cell forward projections
  std::vector<double> bp(flat.values.size()), sens(flat.values.size());
  for (std::size_t c = 0; c < flat.values.size(); ++c) {
    PhaseSpaceGrid unit(small, small);
    unit.values[c] = 1.0;
    auto a = mlem_forward(unit, meas.angles, xs);
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      sens[c] += a.values[k];
      if (f0.values[k] > 0) bp[c] += a.values[k] * meas.values[k] / f0.values[k];
    }
  }
  auto one = mlem_reconstruct(meas, 1, small, small);
  double ratio = 0;
  for (std::size_t c = 0; c < bp.size(); ++c) {
    if (sens[c] <= 0) continue;
    const double expect = bp[c] / sens[c];
    if (ratio == 0 && expect > 0) ratio = one.grid.values[c] / expect;
    CHECK(one.grid.values[c] == doctest::Approx(ratio * expect).epsilon(1e-9).scale(1e-3 * ratio));
  }
}

TEST_CASE("grid metrics reference cases") {
  auto iso = gaussian_grid(10e-6, 10e-6, 0.0);
  CHECK(grid_metrics(iso).anisotropy == doctest::Approx(1.0).epsilon(0.01));
  CHECK(overlap(iso, iso) == doctest::Approx(1.0).epsilon(1e-14));

  // crescent: 85 µm ring smeared uniformly over 2.85 rad of angle
  PhysicalParams pp;
  Ensemble e;
  e.params = pp;
  CounterRng rng(77);
  for (int i = 0; i < 40000; ++i) {
    const double th = -1.425 + 2.85 * rng.uniform();
    const double r = 85e-6 + 5e-6 * rng.normal();
    e.x.push_back(r * std::cos(th));
    e.p.push_back(pp.momentum_scale() * r * std::sin(th));
    e.e_perp.push_back(0.0);
  }
  auto axis = symmetric_axis(150e-6, 128);
  auto m = grid_metrics(bin_ensemble(e, axis, axis), 0.1);
  CHECK(m.angular_spread >= 2.5);
  CHECK(m.angular_spread <= 3.2);
  CHECK(m.arc_equivalent_width == doctest::Approx(2.85).epsilon(0.05));
}
