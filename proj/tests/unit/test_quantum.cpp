#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "oracles.hpp"
#include "phasetomo/dynamics.hpp"
#include "phasetomo/error.hpp"
#include "phasetomo/potential.hpp"
#include "phasetomo/quantum.hpp"
#include "phasetomo/tomography.hpp"

using namespace phasetomo;
using constants::hbar;

namespace {

const PhysicalParams pp{};

WaveFunction1D ground(std::size_t n = 1024, double half = 40e-6, double x0 = 0.0) {
  return init_superposition(pp, oscillator_length(pp), 0.0, n, -half, half, x0);
}

double density_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("ground state widths and uncertainty product") {
  auto psi = ground();
  psi.validate();
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const double s = oscillator_length(pp);
  CHECK(s == doctest::Approx(std::sqrt(hbar / (pp.mass * pp.omega0))));
  auto u = uncertainties(psi);
  CHECK(u.dx == doctest::Approx(s / std::sqrt(2.0)).epsilon(1e-6));
  CHECK(u.dx * u.dp == doctest::Approx(hbar / 2).epsilon(1e-6));
  CHECK(std::abs(u.mean_x) < 1e-12);
}

TEST_CASE("superposition grid checks") {
  const double s = oscillator_length(pp);
  CHECK_THROWS_AS(init_superposition(pp, s, 0.0, 256, -3 * s, 3 * s), GridError);
  CHECK_THROWS_AS(init_superposition(pp, s, 3e6, 64, -40e-6, 40e-6), GridError);
}

TEST_CASE("ground state is stationary and norm is conserved") {
  auto psi = ground();
  auto pot = Potential1D::harmonic(pp);
  auto later = evolve_schrodinger(psi, pot, 10e-6, 0.05);
  CHECK(later.norm() == doctest::Approx(1.0).epsilon(1e-10));
  auto u0 = uncertainties(psi), u1 = uncertainties(later);
  CHECK(u1.dx == doctest::Approx(u0.dx).epsilon(1e-4));
  CHECK(density_l2(position_density(later), position_density(psi)) < 1e-6);
  CHECK(later.time == doctest::Approx(0.05));
  CHECK_THROWS_AS(evolve_schrodinger(psi, pot, 1e-2, 0.05), InputError);
}

TEST_CASE("displaced packet oscillates at the trap frequency") {
  auto psi = ground(1024, 40e-6, 8e-6);
  auto pot = Potential1D::harmonic(pp);
  auto samples = squeezing_scan(psi, pot, 5e-6, 0.1, 20);
  CHECK(oscillation_period(samples) == doctest::Approx(pp.period()).epsilon(2e-3));
  for (const auto& s : samples) CHECK(s.dx == doctest::Approx(samples.front().dx).epsilon(1e-3));
}

TEST_CASE("packet leaving the box raises a boundary error") {
  auto psi = init_superposition(pp, oscillator_length(pp), 0.0, 512, -10e-6, 10e-6, 0.0);
  auto pot = Potential1D::harmonic(pp);
  auto fast = psi;
  for (std::size_t i = 0; i < fast.size(); ++i) fast.psi[i] *= std::polar(1.0, 4e6 * fast.x(i));
  CHECK_THROWS_AS(evolve_schrodinger(fast, pot, 2e-6, 0.01), BoundaryError);
}

TEST_CASE("direct Wigner function of the two-momentum state") {
  const double s = oscillator_length(pp);
  const double k = constants::pi * 1e6;
  auto psi = init_superposition(pp, s, k, 4096, -128e-6, 128e-6);
  auto w = wigner_from_wavefunction(psi, 16e-6, 16e-6);
  CHECK(w.is_signed);
  CHECK(w.total_mass() == doctest::Approx(1.0).epsilon(1e-3));
  const double ms = pp.momentum_scale();
  double num = 0, den = 0, wmin = 0, wmax = 0;
  for (std::size_t ip = 0; ip < w.np(); ++ip)
    for (std::size_t iq = 0; iq < w.nq(); ++iq) {
      const double q = w.q.center(iq), pb = w.p.center(ip);
      const double ref = oracle::cat_wigner(q, pb * ms / hbar, s, k) * ms / hbar;
      num += std::pow(w.at(iq, ip) - ref, 2);
      den += ref * ref;
      wmin = std::min(wmin, w.at(iq, ip));
      wmax = std::max(wmax, w.at(iq, ip));
    }
  CHECK(std::sqrt(num / den) < 0.02);
  CHECK(-wmin > 0.5 * wmax);
}

TEST_CASE("free flight and stretch geometry") {
  auto g = tof_geometry(pp.omega0, 30e-3);
  CHECK(g.stretch == doctest::Approx(std::sqrt(1 + std::pow(pp.omega0 * 30e-3, 2))));
  CHECK(g.theta_f == doctest::Approx(-std::atan(pp.omega0 * 30e-3)));

  // a Gaussian spreads as Δx(t)² = Δx² + (Δp t/m)²
  auto psi = ground(4096, 128e-6);
  auto u0 = uncertainties(psi);
  auto f = free_flight(psi, 30e-3);
  const double expect = std::sqrt(u0.dx * u0.dx + std::pow(u0.dp * 30e-3 / pp.mass, 2));
  CHECK(uncertainties(f).dx == doctest::Approx(expect).epsilon(1e-6));
  CHECK(f.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shear equals rotation plus stretch on a phase-space Gaussian") {
  const double s1 = 3e-6, s2 = 2e-6;
  PhaseSpaceGrid g(symmetric_axis(60e-6, 960), symmetric_axis(60e-6, 960));
  for (std::size_t ip = 0; ip < g.np(); ++ip)
    for (std::size_t iq = 0; iq < g.nq(); ++iq)
      g.at(iq, ip) = std::exp(-0.5 * std::pow(g.q.center(iq) / s1, 2) - 0.5 * std::pow(g.p.center(ip) / s2, 2));
  TofGeometry geo{};
  auto sheared = tof_map(g, pp.omega0, 30e-3, &geo);
  auto x = symmetric_axis(60e-6, 960);
  auto marg = project(sheared, 0.0, x);
  auto rot = project(g, -geo.theta_f, symmetric_axis(60e-6 / geo.stretch, 960));
  double l1 = 0;
  for (std::size_t j = 0; j < x.n; ++j) l1 += std::abs(marg[j] - rot[j] / geo.stretch) * x.step();
  CHECK(l1 < 1e-3);
}

TEST_CASE("relative L2 in a box and oscillation period helpers") {
  PhaseSpaceGrid a(symmetric_axis(1, 10), symmetric_axis(1, 10), true);
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = std::sin(0.3 * i) + 2;
  CHECK(relative_l2_in_box(a, a, 0.5, 0.5) == doctest::Approx(0.0));
  std::vector<SqueezingSample> s;
  for (int i = 0; i < 1000; ++i) s.push_back({i * 1e-3, 0, 0, std::sin(2 * constants::pi * i * 1e-3 / 0.1)});
  CHECK(oscillation_period(s) == doctest::Approx(0.1).epsilon(1e-4));
  CHECK_THROWS_AS(oscillation_period({s.begin(), s.begin() + 20}), DomainError);
}

TEST_CASE("oscillator length for the default trap") {
  CHECK(oscillator_length(pp) == doctest::Approx(1.75e-6).epsilon(5e-3));
}

TEST_CASE("superposition has two equal momentum peaks at plus and minus k") {
  const double k = 2e6;
  auto psi = init_superposition(pp, oscillator_length(pp), k, 2048, -64e-6, 64e-6);
  auto [kk, rho] = momentum_density(psi);
  const double dk = kk[1] - kk[0];
  double neg = 0, pos = 0, kneg = 0, kpos = 0, mneg = 0, mpos = 0;
  for (std::size_t i = 0; i < kk.size(); ++i) {
    if (kk[i] < 0) neg += rho[i] * dk;
    if (kk[i] > 0) pos += rho[i] * dk;
    if (kk[i] < 0 && rho[i] > mneg) mneg = rho[i], kneg = kk[i];
    if (kk[i] > 0 && rho[i] > mpos) mpos = rho[i], kpos = kk[i];
  }
  CHECK(neg == doctest::Approx(pos).epsilon(1e-6));
  CHECK(std::abs(kpos - k) <= dk);
  CHECK(std::abs(kneg + k) <= dk);
}

TEST_CASE("ground state density matches the Gaussian") {
  auto psi = ground(2048, 64e-6);
  auto rho = position_density(psi);
  std::vector<double> ref(rho.size());
  const double s = oscillator_length(pp);
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = oracle::gauss1d(psi.x(i), s / std::sqrt(2.0));
  CHECK(density_l2(rho, ref) < 1e-6);
}

TEST_CASE("norm is kept over ten thousand steps") {
  auto psi = init_superposition(pp, oscillator_length(pp), 1e6, 1024, -40e-6, 40e-6, 5e-6);
  auto pot = Potential1D::harmonic(pp).with_quartic(100e-6);
  SplitStepper stepper(psi, pot, 5e-6);
  stepper.advance(psi, 10000);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-9);
}

TEST_CASE("coherent state revives after one trap period") {
  auto psi = ground(2048, 64e-6, 15e-6);
  auto pot = Potential1D::harmonic(pp);
  auto later = evolve_schrodinger(psi, pot, 2e-6, pp.period());
  CHECK(density_l2(position_density(later), position_density(psi)) < 1e-4);
  CHECK(uncertainties(later).mean_x == doctest::Approx(15e-6).epsilon(1e-3));
}

TEST_CASE("Wigner marginals, normalization and peak") {
  auto psi = ground(1024, 40e-6);
  auto w = wigner_from_wavefunction(psi);
  const double s = oscillator_length(pp);
  CHECK(w.total_mass() == doctest::Approx(1.0).epsilon(1e-6));

  auto rho = position_density(psi);
  double l1 = 0;
  for (std::size_t iq = 0; iq < w.nq(); ++iq) {
    double m = 0;
    for (std::size_t ip = 0; ip < w.np(); ++ip) m += w.at(iq, ip) * w.p.step();
    l1 += std::abs(m - rho[iq]) * w.q.step();
  }
  CHECK(l1 < 1e-6);

  // p̄ marginal of the ground state is the same Gaussian as the q̄ one
  double l1p = 0;
  for (std::size_t ip = 0; ip < w.np(); ++ip) {
    double m = 0;
    for (std::size_t iq = 0; iq < w.nq(); ++iq) m += w.at(iq, ip) * w.q.step();
    l1p += std::abs(m - oracle::gauss1d(w.p.center(ip), s / std::sqrt(2.0))) * w.p.step();
  }
  CHECK(l1p < 1e-6);

  double peak = 0;
  for (double v : w.values) peak = std::max(peak, v);
  CHECK(peak == doctest::Approx(pp.mass * pp.omega0 / (constants::pi * hbar)).epsilon(1e-6));
}

TEST_CASE("interference fringes have period pi over k") {
  const double k = 1e6;
  auto psi = init_superposition(pp, oscillator_length(pp), k, 4096, -128e-6, 128e-6);
  auto w = wigner_from_wavefunction(psi, 6e-6, 1e-6);
  std::size_t ip0 = 0;
  for (std::size_t ip = 0; ip < w.np(); ++ip)
    if (std::abs(w.p.center(ip)) < std::abs(w.p.center(ip0))) ip0 = ip;
  // upward zero crossings along q̄ at p̄ ≈ 0
  std::vector<double> up;
  for (std::size_t iq = 1; iq < w.nq(); ++iq) {
    const double a = w.at(iq - 1, ip0), b = w.at(iq, ip0);
    if (a < 0 && b >= 0) up.push_back(w.q.center(iq - 1) + w.q.step() * a / (a - b));
  }
  REQUIRE(up.size() >= 3);
  const double period = (up.back() - up.front()) / static_cast<double>(up.size() - 1);
  CHECK(period == doctest::Approx(constants::pi / k).epsilon(0.01));
}

TEST_CASE("time of flight edge cases") {
  auto g = PhaseSpaceGrid(symmetric_axis(20e-6, 40), symmetric_axis(20e-6, 40), true);
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = std::cos(0.1 * static_cast<double>(i));
  auto same = tof_map(g, pp.omega0, 0.0);
  for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(same.values[i] == doctest::Approx(g.values[i]).epsilon(1e-12));
  for (double tf : {0.0, 1e-3, 30e-3, 0.2}) {
    auto geo = tof_geometry(pp.omega0, tf);
    CHECK(geo.stretch * std::cos(geo.theta_f) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("free flight leaves the momentum spread unchanged") {
  auto psi = init_superposition(pp, oscillator_length(pp), 1e6, 4096, -128e-6, 128e-6);
  auto u0 = uncertainties(psi);
  auto u1 = uncertainties(free_flight(psi, 20e-3));
  CHECK(u1.dp == doctest::Approx(u0.dp).epsilon(1e-6));
}

TEST_CASE("harmonic evolution rotates the Wigner function") {
  auto psi = init_superposition(pp, oscillator_length(pp), 0.5e6, 2048, -64e-6, 64e-6, 3e-6);
  auto pot = Potential1D::harmonic(pp);
  const double t = 0.3 * pp.period();
  auto w0 = wigner_from_wavefunction(psi, 14e-6, 14e-6);
  auto w1 = wigner_from_wavefunction(evolve_schrodinger(psi, pot, 2e-6, t), 14e-6, 14e-6);
  auto rot = phase_rotation(w0, -pp.omega0 * t);
  CHECK(relative_l2_in_box(w1, rot, 10e-6, 10e-6) < 1e-3);
}

TEST_CASE("Ehrenfest relation in the quartic trap") {
  auto pot = Potential1D::harmonic(pp).with_quartic(100e-6);
  auto psi = ground(2048, 64e-6, 15e-6);
  const double h = 20e-6;
  SplitStepper stepper(psi, pot, h);
  double worst = 0, scale = 0;
  auto prev = uncertainties(psi);
  auto cur_psi = psi;
  stepper.advance(cur_psi, 1);
  for (int i = 0; i < 600; ++i) {
    auto next_psi = cur_psi;
    stepper.advance(next_psi, 1);
    const auto next = uncertainties(next_psi);
    const double dpdt = (next.mean_p - prev.mean_p) / (2 * h);
    auto rho = position_density(cur_psi);
    double f = 0;
    for (std::size_t j = 0; j < rho.size(); ++j) f += rho[j] * pot.eval(cur_psi.x(j)).force * cur_psi.dx();
    worst = std::max(worst, std::abs(dpdt - f));
    scale = std::max(scale, std::abs(f));
    prev = uncertainties(cur_psi);
    cur_psi = next_psi;
  }
  CHECK(worst < 0.02 * scale);
}

TEST_CASE("tomography of the ground state is isotropic and non-negative") {
  auto psi = ground(2048, 64e-6);
  QuantumTomographySettings st;
  st.n_angles = 13;
  auto r = quantum_tomography(psi, Potential1D::harmonic(pp), st);
  const auto& w = r.wigner;
  CHECK(grid_metrics(w, 0.1).anisotropy < 1.05);

  // negativity on the object support, r < 4 marginal widths
  const double support = 4 * oscillator_length(pp) / std::sqrt(2.0);
  double wmin = 0, wmax = 0, floor_min = 0;
  for (std::size_t ip = 0; ip < w.np(); ++ip)
    for (std::size_t iq = 0; iq < w.nq(); ++iq) {
      const double v = w.at(iq, ip);
      wmax = std::max(wmax, v);
      floor_min = std::min(floor_min, v);
      if (std::hypot(w.q.center(iq), w.p.center(ip)) < support) wmin = std::min(wmin, v);
    }
  CHECK(-wmin < 0.05 * wmax);

  // the far-field floor is that of plain 13-angle FBP on the exact marginals
  Sinogram exact;
  exact.angles = uniform_angles(13);
  exact.x = st.projection_axis;
  const double sm = oscillator_length(pp) / std::sqrt(2.0);
  for (std::size_t a = 0; a < exact.angles.size(); ++a)
    for (std::size_t j = 0; j < exact.x.n; ++j) exact.values.push_back(oracle::gauss1d(exact.x.center(j), sm));
  auto ideal = fbp_reconstruct(exact, st.k_c, st.q_axis, st.p_axis).raw;
  const double imax = *std::max_element(ideal.values.begin(), ideal.values.end());
  const double imin = *std::min_element(ideal.values.begin(), ideal.values.end());
  CHECK(floor_min / wmax == doctest::Approx(imin / imax).epsilon(0.1));
}
