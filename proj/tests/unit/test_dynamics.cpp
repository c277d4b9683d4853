#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "phasetomo/collisions.hpp"
#include "phasetomo/dynamics.hpp"
#include "phasetomo/ensemble.hpp"
#include "phasetomo/error.hpp"
#include "phasetomo/period.hpp"
#include "phasetomo/potential.hpp"
#include "phasetomo/rng.hpp"

using namespace phasetomo;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}

Potential1D corrugated(double scale = 1.0) {
  return Potential1D::harmonic(PhysicalParams{}).with_corrugation(synth_paper_corrugation(scale));
}

// Shoelace area of a closed polygon in (x, p̄).
double polygon_area(const Ensemble& e) {
  const double ms = e.params.momentum_scale();
  double a = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const std::size_t j = (i + 1) % e.size();
    a += e.x[i] * e.p[j] / ms - e.x[j] * e.p[i] / ms;
  }
  return 0.5 * std::abs(a);
}

Ensemble ring(const PhysicalParams& pp, double cx, double r, std::size_t n) {
  Ensemble e;
  e.params = pp;
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = 2 * constants::pi * i / n;
    e.x.push_back(cx + r * std::cos(phi));
    e.p.push_back(pp.momentum_scale() * r * std::sin(phi));
    e.e_perp.push_back(0.0);
  }
  return e;
}

}  // namespace

TEST_CASE("counter rng is reproducible and has the right moments") {
  CounterRng a(derive_key(11, 2, 3));
  CounterRng b(derive_key(11, 2, 3));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(derive_key(11, 2, 3) != derive_key(11, 3, 2));

  CounterRng r(42);
  std::vector<double> u, n, x;
  for (int i = 0; i < 200000; ++i) {
    u.push_back(r.uniform());
    n.push_back(r.normal());
    x.push_back(r.exponential());
  }
  CHECK(*std::min_element(u.begin(), u.end()) > 0.0);
  CHECK(*std::max_element(u.begin(), u.end()) < 1.0);
  CHECK(mean(u) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(mean(n)) < 0.01);
  CHECK(variance(n) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(mean(x) == doctest::Approx(1.0).epsilon(0.01));

  // resuming from a counter continues the same stream
  CounterRng c(7);
  c.next_u64();
  c.next_u64();
  CounterRng d(7, 2);
  CHECK(c.next_u64() == d.next_u64());
}

TEST_CASE("thermal ensemble statistics") {
  PhysicalParams pp;
  auto e = sample_ensemble(pp, 85e-6, 20000, 3);
  e.validate();
  const double sx2 = pp.kT() / (pp.mass * pp.omega0 * pp.omega0);
  CHECK(mean(e.x) == doctest::Approx(85e-6).epsilon(0.01));
  CHECK(variance(e.x) == doctest::Approx(sx2).epsilon(0.04));
  CHECK(variance(e.p) == doctest::Approx(pp.mass * pp.kT()).epsilon(0.04));
  CHECK(mean(e.e_perp) == doctest::Approx(pp.kT()).epsilon(0.03));
  CHECK(*std::min_element(e.e_perp.begin(), e.e_perp.end()) >= 0.0);

  auto again = sample_ensemble(pp, 85e-6, 20000, 3);
  CHECK(again.x == e.x);
  CHECK(again.p == e.p);
  auto other = sample_ensemble(pp, 85e-6, 20000, 4);
  CHECK(other.x != e.x);
  CHECK_THROWS_AS(sample_ensemble(pp, 0.0, 0, 1), InputError);
}

TEST_CASE("verlet in a harmonic trap follows the exact rotation") {
  PhysicalParams pp;
  auto e = sample_ensemble(pp, 85e-6, 200, 5);
  auto pot = Potential1D::harmonic(pp);
  auto v = integrate(e, pot, 10e-6, 0.5);
  auto exact = harmonic_evolution(e, 0.5);
  const double ms = pp.momentum_scale();
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(std::abs(v.x[i] - exact.x[i]) < 1e-8);
    CHECK(std::abs(v.p[i] - exact.p[i]) / ms < 1e-8);
  }
  CHECK(v.time == doctest::Approx(0.5));
  CHECK_THROWS_AS(integrate(e, pot, pp.period() / 40, 0.1), InputError);
}

TEST_CASE("harmonic evolution is a rotation by minus omega t") {
  PhysicalParams pp;
  auto e = sample_ensemble(pp, 40e-6, 50, 9);
  const double t = 0.0123;
  auto h = harmonic_evolution(e, t);
  auto r = phase_rotation(e, -pp.omega0 * t);
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(h.x[i] == doctest::Approx(r.x[i]).epsilon(1e-12).scale(1e-9));
    CHECK(h.p[i] == doctest::Approx(r.p[i]).epsilon(1e-12).scale(1e-30));
  }
  auto back = phase_rotation(phase_rotation(e, 0.7), -0.7);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(back.x[i] == doctest::Approx(e.x[i]).scale(1e-9));
}

TEST_CASE("verlet energy has no secular drift") {
  PhysicalParams pp;
  const double dt = 10e-6;
  // returns {drift of the period-averaged energy, largest single-step excursion}
  auto measure = [&](const Potential1D& pot) {
    const double x0 = 85e-6 + 12e-6;
    const double p0 = 0.3 * pp.momentum_scale() * 20e-6;
    const double e0 = particle_energy(pot, x0, p0);
    auto traj = trajectory(pot, x0, p0, dt, 0.5, 1);
    const auto per = static_cast<std::size_t>(std::round(pp.period() / dt));
    double first = 0, last = 0, worst = 0;
    for (std::size_t i = 0; i < per; ++i) {
      first += particle_energy(pot, traj[i].x, traj[i].p) / per;
      last += particle_energy(pot, traj[traj.size() - 1 - i].x, traj[traj.size() - 1 - i].p) / per;
    }
    for (const auto& s : traj) worst = std::max(worst, std::abs(particle_energy(pot, s.x, s.p) / e0 - 1));
    CHECK(traj.back().t == doctest::Approx(0.5));
    return std::pair{std::abs(last / first - 1), worst};
  };
  SUBCASE("harmonic") {
    auto [drift, worst] = measure(Potential1D::harmonic(pp));
    CHECK(drift < 1e-6);
    // bounded oscillation of the velocity-Verlet energy, (ω dt)²/4
    CHECK(worst < 1.05 * std::pow(pp.omega0 * dt, 2) / 4);
  }
  SUBCASE("corrugated") {
    auto [drift, worst] = measure(corrugated());
    CHECK(drift < 1e-6);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("phase-space area is conserved") {
  PhysicalParams pp;
  SUBCASE("second-moment ellipse in the harmonic trap") {
    auto e = sample_ensemble(pp, 85e-6, 2000, 1);
    const double a0 = phase_moments(e, 0.0).ellipse_area();
    auto later = integrate(e, Potential1D::harmonic(pp), 10e-6, 0.37);
    CHECK(phase_moments(later, 0.0).ellipse_area() == doctest::Approx(a0).epsilon(1e-6));
  }
  SUBCASE("boundary polygon in the corrugated trap") {
    auto e = ring(pp, 85e-6, 15e-6, 4000);
    const double a0 = polygon_area(e);
    auto later = integrate(e, corrugated(), 10e-6, 0.1);
    CHECK(polygon_area(later) == doctest::Approx(a0).epsilon(1e-3));
  }
}

TEST_CASE("turning points and period in the harmonic trap") {
  PhysicalParams pp;
  auto pot = Potential1D::harmonic(pp);
  const double xm = 30e-6;
  const double e = pp.harmonic_energy(xm);
  auto tp = turning_points(pot, e);
  CHECK(tp.left == doctest::Approx(-xm).epsilon(1e-9));
  CHECK(tp.right == doctest::Approx(xm).epsilon(1e-9));
  CHECK(period_direct(pot, e) == doctest::Approx(pp.period()).epsilon(1e-8));
  CHECK(std::abs(period_perturbative(pot, e, PerturbationMode::exact_integral)) < 1e-9 * pp.period());
  CHECK(trajectory_period(pot, xm, 0.0, 10e-6) == doctest::Approx(pp.period()).epsilon(1e-4));
  CHECK_THROWS_AS(turning_points(pot, 0.0), InputError);
}

TEST_CASE("quartic period shift matches the small-amplitude closed form") {
  PhysicalParams pp;
  const double w = 100e-6;
  auto pot = Potential1D::harmonic(pp).with_quartic(w);
  for (double xm : {3e-6, 6e-6}) {
    const double e = pot.eval(xm).energy;
    const double dt = period_direct(pot, e) / pp.period() - 1;
    const double closed = -0.75 * (xm / w) * (xm / w);
    CHECK(dt == doctest::Approx(closed).epsilon(0.02));
    const double pert = period_perturbative(pot, e, PerturbationMode::exact_integral) / pp.period();
    CHECK(pert == doctest::Approx(dt).epsilon(1e-3));
  }
}

TEST_CASE("corrugation slows low orbits and speeds up high ones") {
  PhysicalParams pp;
  auto pot = corrugated();
  const double es = pp.harmonic_energy(85e-6);
  std::vector<double> energies;
  for (int i = 0; i < 24; ++i) energies.push_back(es * (0.3 + 1.7 * i / 23.0));
  auto curve = frequency_shift_curve(pot, energies);
  CHECK(curve(0.35 * es) < 0.0);
  CHECK(curve(1.9 * es) > 0.0);
  CHECK(curve.min_shift() < 0.0);
  CHECK(curve.max_shift() > 0.0);
  CHECK_THROWS_AS(curve(10 * es), DomainError);

  // the perturbative forms agree with the quadrature
  double span = std::max(std::abs(curve.min_shift()), curve.max_shift());
  for (double f : {0.4, 0.8, 1.2, 1.8}) {
    const double e = f * es;
    const double direct = period_direct(pot, e) / pp.period() - 1;
    const double exact = period_perturbative(pot, e, PerturbationMode::exact_integral) / pp.period();
    const double lowest = period_perturbative(pot, e, PerturbationMode::lowest_order) / pp.period();
    CHECK(std::abs(exact - direct) < 0.01 * span);
    CHECK(std::abs(lowest - direct) < 0.1 * span);
  }
}

TEST_CASE("angle evolution reduces to harmonic rotation without corrugation") {
  PhysicalParams pp;
  auto pot = Potential1D::harmonic(pp);
  auto e = sample_ensemble(pp, 60e-6, 300, 2);
  std::vector<double> energies;
  double emax = 0;
  for (std::size_t i = 0; i < e.size(); ++i) emax = std::max(emax, particle_energy(pot, e.x[i], e.p[i]));
  for (int i = 0; i < 16; ++i) energies.push_back(1e-3 * emax + (1.01 * emax) * i / 15.0);
  auto curve = frequency_shift_curve(pot, energies);
  auto a = angle_evolution(e, pot, curve, 0.2);
  auto h = harmonic_evolution(e, 0.2);
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(a.x[i] == doctest::Approx(h.x[i]).scale(1e-9).epsilon(1e-6));
    CHECK(a.p[i] / pp.momentum_scale() == doctest::Approx(h.p[i] / pp.momentum_scale()).scale(1e-9).epsilon(1e-6));
  }
}

TEST_CASE("pair scattering conserves momentum and energy") {
  PhysicalParams pp;
  const double m = pp.mass;
  CounterRng rng(derive_key(1, 2));
  for (int trial = 0; trial < 1000; ++trial) {
    double p1 = m * (rng.uniform() - 0.5) * 0.02, p2 = m * (rng.uniform() - 0.5) * 0.02;
    double e1 = pp.kT() * rng.exponential(), e2 = pp.kT() * rng.exponential();
    const double ptot = p1 + p2;
    const double etot = (p1 * p1 + p2 * p2) / (2 * m) + e1 + e2;
    scatter_pair(p1, e1, p2, e2, m, rng);
    CHECK(p1 + p2 == doctest::Approx(ptot).epsilon(1e-12).scale(1e-30));
    CHECK((p1 * p1 + p2 * p2) / (2 * m) + e1 + e2 == doctest::Approx(etot).epsilon(1e-12));
    CHECK(e1 >= 0.0);
    CHECK(e2 >= 0.0);
  }
}

TEST_CASE("collision step conserves totals and matches the pair rate") {
  PhysicalParams pp;
  pp.sigma_el *= 50;  // more events for better statistics
  auto e = sample_ensemble(pp, 0.0, 3000, 8);
  double p0 = 0, e0 = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    p0 += e.p[i];
    e0 += e.p[i] * e.p[i] / (2 * pp.mass) + e.e_perp[i];
  }

  // expected number of collisions for the first step
  const double cell = 5e-6;
  const double dt = 1e-3;
  double expected = 0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = i + 1; j < e.size(); ++j)
      if (std::floor(e.x[i] / cell) == std::floor(e.x[j] / cell))
        expected += pp.sigma_el * dt / (cell * transverse_area(pp)) *
                    relative_speed(e.p[i], e.e_perp[i], e.p[j], e.e_perp[j], pp.mass);

  std::size_t seen = 0;
  const int steps = 20;
  Ensemble cur = e;
  for (int s = 0; s < steps; ++s) {
    CollisionReport rep;
    auto next = collision_step(e, dt, cell, 99 + s, &rep);
    seen += rep.collisions;
    if (s == 0) cur = next;
  }
  CHECK(static_cast<double>(seen) / steps == doctest::Approx(expected).epsilon(5.0 / std::sqrt(expected * steps)));

  double p1 = 0, e1 = 0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    p1 += cur.p[i];
    e1 += cur.p[i] * cur.p[i] / (2 * pp.mass) + cur.e_perp[i];
  }
  CHECK(p1 == doctest::Approx(p0).epsilon(1e-10).scale(1e-28));
  CHECK(e1 == doctest::Approx(e0).epsilon(1e-10));
  CHECK(cur.collision_steps == 1);
  CHECK(cur.x == e.x);

  CHECK_THROWS_AS(collision_step(e, 10.0, cell, 1), InputError);
  CHECK_THROWS_AS(collision_step(e, dt, 0.0, 1), InputError);
}

TEST_CASE("zero temperature ensemble collapses onto the shifted center") {
  PhysicalParams pp;
  pp.temperature = 1e-12;
  auto e = sample_ensemble(pp, 85e-6, 1000, 1);
  const double w = pp.omega0;
  const double sx = std::sqrt(pp.kT() / (pp.mass * w * w));
  CHECK(sx < 0.05e-6);
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(std::abs(e.x[i] - 85e-6) < 6 * sx);
    CHECK(std::abs(e.p[i]) / pp.momentum_scale() < 6 * sx);
  }
}

TEST_CASE("ensemble energy statistics") {
  PhysicalParams pp;
  auto pot = Potential1D::harmonic(pp);
  auto e = sample_ensemble(pp, 85e-6, 100000, 12);
  std::vector<double> en(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) en[i] = particle_energy(pot, e.x[i], e.p[i]);
  const double es = pp.harmonic_energy(85e-6);
  const double kt = pp.kT();
  CHECK(mean(en) == doctest::Approx(es + kt).epsilon(0.01));
  const double sd = std::sqrt(variance(en));
  CHECK(sd == doctest::Approx(std::sqrt(kt * (kt + 2 * es))).epsilon(0.02));
  CHECK(sd / constants::kB == doctest::Approx(845e-9).epsilon(0.02));
}

TEST_CASE("harmonic period closure") {
  PhysicalParams pp;
  auto pot = Potential1D::harmonic(pp);
  Ensemble e;
  e.params = pp;
  e.x = {85e-6};
  e.p = {0.0};
  e.e_perp = {0.0};
  auto full = integrate(e, pot, 10e-6, pp.period());
  CHECK(full.x[0] == doctest::Approx(85e-6).epsilon(1e-4));
  CHECK(std::abs(full.p[0]) / pp.momentum_scale() < 1e-4 * 85e-6);
  auto half = integrate(e, pot, 10e-6, pp.period() / 2);
  CHECK(half.x[0] == doctest::Approx(-85e-6).epsilon(1e-4));
  CHECK(std::abs(half.p[0]) / pp.momentum_scale() < 1e-4 * 85e-6);
}

TEST_CASE("quartic trap period at 15 um amplitude") {
  PhysicalParams pp;
  auto pot = Potential1D::harmonic(pp).with_quartic(100e-6);
  const double zero_cross = trajectory_period(pot, 15e-6, 0.0, 10e-6, 4) / pp.period() - 1;
  const double direct = period_direct(pot, pot.eval(15e-6).energy) / pp.period() - 1;
  CHECK(std::abs(zero_cross) == doctest::Approx(0.017).epsilon(0.3 / 1.7));
  CHECK(std::abs(direct) == doctest::Approx(0.0169).epsilon(0.05 / 1.69));
  CHECK(direct < 0.0);
  const double lowest = period_perturbative(pot, pot.eval(15e-6).energy, PerturbationMode::lowest_order);
  CHECK(lowest / pp.period() == doctest::Approx(-0.75 * 0.15 * 0.15).epsilon(0.05));
}

TEST_CASE("direct period agrees with the integrated orbit in the corrugated trap") {
  PhysicalParams pp;
  auto pot = corrugated();
  const double es = pp.harmonic_energy(85e-6);
  // start at the right turning point of the orbit with energy es
  const double xr = turning_points(pot, es).right;
  const double direct = period_direct(pot, es);
  CHECK(trajectory_period(pot, xr, 0.0, 2e-6, 4) == doctest::Approx(direct).epsilon(1e-3));
}

TEST_CASE("period perturbation vanishes without a perturbation") {
  PhysicalParams pp;
  auto pot = Potential1D::harmonic(pp);
  const double e = pp.harmonic_energy(40e-6);
  CHECK(period_perturbative(pot, e, PerturbationMode::exact_integral) == 0.0);
  CHECK(period_perturbative(pot, e, PerturbationMode::lowest_order) == 0.0);
  std::vector<double> grid{0.5 * e, e, 1.5 * e, 2 * e, 3 * e};
  auto flat = frequency_shift_curve(pot, grid);
  for (double s : flat.shifts()) CHECK(std::abs(s) < 1e-9);
}

TEST_CASE("frequency shift responds linearly to the corrugation scale") {
  PhysicalParams pp;
  const double es = pp.harmonic_energy(85e-6);
  std::vector<double> grid;
  for (int i = 0; i < 12; ++i) grid.push_back(es * (0.4 + 1.5 * i / 11.0));
  auto c1 = frequency_shift_curve(corrugated(1.0), grid);
  auto c2 = frequency_shift_curve(corrugated(2.0), grid);
  REQUIRE(c1.shifts().size() == c2.shifts().size());
  const double span = c1.max_shift() - c1.min_shift();
  for (std::size_t i = 0; i < c1.shifts().size(); ++i)
    CHECK(std::abs(c2.shifts()[i] - 2 * c1.shifts()[i]) < 0.2 * 2 * span);
}

TEST_CASE("angle evolution closes after one period on a flat curve and keeps radii") {
  PhysicalParams pp;
  auto pot = Potential1D::harmonic(pp);
  auto e = sample_ensemble(pp, 50e-6, 200, 3);
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) grid.push_back(1e-33 + 1e-28 * i);
  FrequencyShiftCurve flat(grid, std::vector<double>(grid.size(), 0.0));
  auto a = angle_evolution(e, pot, flat, pp.period());
  const double ms = pp.momentum_scale();
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(a.x[i] == doctest::Approx(e.x[i]).epsilon(1e-12).scale(1e-6 * 1e-6));
    CHECK(a.p[i] / ms == doctest::Approx(e.p[i] / ms).epsilon(1e-12).scale(1e-6 * 1e-6));
  }
  auto pc = corrugated();
  std::vector<double> g2;
  const double es = pp.harmonic_energy(85e-6);
  for (int i = 0; i < 40; ++i) g2.push_back(es * (0.01 + 3.0 * i / 39.0));
  auto curve = frequency_shift_curve(pc, g2);
  auto one = sample_ensemble(pp, 85e-6, 20, 4);
  auto moved = angle_evolution(one, pc, curve, 0.37);
  for (std::size_t i = 0; i < one.size(); ++i) {
    const double r0 = std::hypot(one.x[i], one.p[i] / ms);
    const double r1 = std::hypot(moved.x[i], moved.p[i] / ms);
    CHECK(r1 == doctest::Approx(r0).epsilon(1e-14));
  }
}

TEST_CASE("phase rotation special angles") {
  PhysicalParams pp;
  Ensemble e;
  e.params = pp;
  e.x = {20e-6};
  e.p = {0.0};
  e.e_perp = {0.0};
  const double ms = pp.momentum_scale();
  auto id = phase_rotation(e, 0.0);
  CHECK(id.x[0] == e.x[0]);
  auto half = phase_rotation(e, constants::pi);
  CHECK(half.x[0] == doctest::Approx(-20e-6).epsilon(1e-14));
  CHECK(std::abs(half.p[0] / ms) < 1e-18);
  auto quarter = phase_rotation(e, constants::pi / 2);
  CHECK(std::abs(quarter.x[0]) < 1e-18);
  CHECK(quarter.p[0] / ms == doctest::Approx(20e-6).epsilon(1e-14));
}

TEST_CASE("collision edge cases") {
  PhysicalParams pp;
  auto e = sample_ensemble(pp, 0.0, 500, 1);
  e.params.sigma_el = 0.0;
  auto same = collision_step(e, 1e-3, 5e-6, 1);
  CHECK(same.p == e.p);
  CHECK(same.e_perp == e.e_perp);

  CounterRng rng(3);
  double p1 = 1e-28, p2 = -1e-28, e1 = pp.kT(), e2 = 0.5 * pp.kT();
  scatter_pair(p1, e1, p2, e2, pp.mass, rng);
  CHECK(p1 + p2 == 0.0);
}
