#include "phasetomo/period.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/fpclassify.hpp>
// pchip.hpp calls unqualified isnan.
using boost::math::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "phasetomo/dynamics.hpp"
#include "phasetomo/error.hpp"
#include "phasetomo/parallel.hpp"

namespace phasetomo {

using constants::pi;

namespace {

double stiffness(const PhysicalParams& p) { return p.mass * p.omega0 * p.omega0; }

double harmonic_amplitude(const Potential1D& pot, double energy) {
  return std::sqrt(2.0 * energy / stiffness(pot.params()));
}

// First sign change of E − V walking outward from the center.
double find_turning_point(const Potential1D& pot, double energy, double direction, double x_h) {
  const double c = pot.center();
  auto f = [&](double x) { return energy - pot.eval(x).energy; };
  const double step = 1.2 * x_h / 480.0;
  double inner = c;
  double outer = c;
  bool bracketed = false;
  for (int k = 1; k <= 4800; ++k) {
    outer = c + direction * step * k;
    if (f(outer) <= 0.0) {
      bracketed = true;
      break;
    }
    inner = outer;
  }
  if (!bracketed) throw DomainError("turning point not found within 12 harmonic amplitudes");
  for (int it = 0; it < 200 && std::abs(outer - inner) > 1e-15 * std::max(x_h, std::abs(c)); ++it) {
    const double mid = 0.5 * (inner + outer);
    if (f(mid) > 0.0) {
      inner = mid;
    } else {
      outer = mid;
    }
  }
  return 0.5 * (inner + outer);
}

void require_energy(double energy) {
  if (!std::isfinite(energy) || !(energy > 0.0)) throw InputError("energy must be finite and > 0");
}

}  // namespace

TurningPoints turning_points(const Potential1D& pot, double energy) {
  require_energy(energy);
  const double c = pot.center();
  if (!(energy > pot.eval(c).energy)) {
    throw DomainError("orbit does not encircle the trap center (E <= V(center))");
  }
  const double x_h = harmonic_amplitude(pot, energy);
  return {find_turning_point(pot, energy, -1.0, x_h), find_turning_point(pot, energy, +1.0, x_h)};
}

double period_direct(const Potential1D& pot, double energy) {
  const auto tp = turning_points(pot, energy);
  const double mass = pot.params().mass;
  const double mid = 0.5 * (tp.left + tp.right);
  const double half = 0.5 * (tp.right - tp.left);
  // x = mid + half·sinφ removes the inverse square-root endpoint singularities.
  auto integrand = [&](double phi) {
    const double x = mid + half * std::sin(phi);
    const double kinetic = energy - pot.eval(x).energy;
    if (kinetic <= 0.0) return 0.0;
    return half * std::cos(phi) / std::sqrt(2.0 * kinetic / mass);
  };
  double err = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -0.5 * pi, 0.5 * pi, 15, 1e-12, &err);
  return 2.0 * integral;
}

namespace {

double exact_integral_shift(const Potential1D& pot, double energy) {
  const double k = stiffness(pot.params());
  const double c = pot.center();
  const double x_h = harmonic_amplitude(pot, energy);
  constexpr std::size_t n_theta = 8192;
  double sum = 0.0;
  double r = x_h;
  for (std::size_t i = 0; i < n_theta; ++i) {
    const double theta = 2.0 * pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n_theta);
    const double ct = std::cos(theta);
    // Solve ½kr² + ΔU(r cosθ) = E; the previous angle's root is a good start.
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      const double x = c + r * ct;
      const double g = 0.5 * k * r * r + pot.perturbation(x) - energy;
      const double dg = k * r - pot.perturbation_force(x) * ct;
      if (!(dg > 0.0)) break;
      const double dr = g / dg;
      r -= dr;
      if (std::abs(dr) <= 1e-14 * x_h) {
        converged = true;
        break;
      }
    }
    if (!converged || !(r > 0.0)) {
      throw ConvergenceError("period_perturbative: Newton iteration for r(theta) failed; perturbation too strong");
    }
    const double u = r * ct;
    const double du = pot.perturbation(c + u);
    const double a = 0.5 * u * pot.perturbation_force(c + u);
    const double denom = energy - du - a;
    if (!(denom > 0.0)) throw DomainError("period_perturbative: orbit does not encircle the trap center");
    sum += a / denom;
  }
  return sum * (2.0 * pi / static_cast<double>(n_theta)) / pot.params().omega0;
}

double lowest_order_shift(const Potential1D& pot, double energy) {
  const double c = pot.center();
  const double x_max = harmonic_amplitude(pot, energy);
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double u = x_max * (-1.0 + i / 200.0);
    worst = std::max(worst, std::abs(pot.perturbation(c + u)));
  }
  if (worst / energy >= 0.3) {
    throw DomainError("period_perturbative: lowest_order needs max|dU|/E < 0.3");
  }
  auto integrand = [&](double phi) {
    const double u = x_max * std::sin(phi);
    return u * pot.perturbation_force(c + u);
  };
  double err = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -0.5 * pi, 0.5 * pi, 15, 1e-12, &err);
  return integral / (pot.params().omega0 * energy);
}

}  // namespace

double period_perturbative(const Potential1D& pot, double energy, PerturbationMode mode) {
  require_energy(energy);
  if (pot.is_harmonic()) return 0.0;
  return mode == PerturbationMode::exact_integral ? exact_integral_shift(pot, energy)
                                                  : lowest_order_shift(pot, energy);
}

struct FrequencyShiftCurve::Interpolant {
  boost::math::interpolators::pchip<std::vector<double>> spline;
};

FrequencyShiftCurve::FrequencyShiftCurve(std::vector<double> energies, std::vector<double> shifts,
                                         std::vector<Gap> gaps)
    : energies_(std::move(energies)), shifts_(std::move(shifts)), gaps_(std::move(gaps)) {
  if (energies_.size() != shifts_.size()) throw InputError("FrequencyShiftCurve: size mismatch");
  if (energies_.size() < 4) throw InputError("FrequencyShiftCurve: need at least 4 tabulated energies");
  for (std::size_t i = 0; i < energies_.size(); ++i) {
    if (!std::isfinite(energies_[i]) || !std::isfinite(shifts_[i])) {
      throw InputError("FrequencyShiftCurve: non-finite entry");
    }
    if (i > 0 && !(energies_[i] > energies_[i - 1])) {
      throw InputError("FrequencyShiftCurve: energies must be strictly increasing");
    }
    if (std::abs(shifts_[i]) >= 0.2) {
      throw DomainError("FrequencyShiftCurve: |dw/w0| >= 0.2, perturbation too strong");
    }
  }
  interp_ = std::make_shared<const Interpolant>(
      Interpolant{boost::math::interpolators::pchip<std::vector<double>>(std::vector<double>(energies_),
                                                                         std::vector<double>(shifts_))});
}

bool FrequencyShiftCurve::contains(double energy) const {
  return !energies_.empty() && energy >= energies_.front() && energy <= energies_.back();
}

double FrequencyShiftCurve::operator()(double energy) const {
  if (!contains(energy)) throw DomainError("FrequencyShiftCurve: energy outside tabulated range");
  return interp_->spline(energy);
}

double FrequencyShiftCurve::min_shift() const { return *std::min_element(shifts_.begin(), shifts_.end()); }
double FrequencyShiftCurve::max_shift() const { return *std::max_element(shifts_.begin(), shifts_.end()); }

FrequencyShiftCurve frequency_shift_curve(const Potential1D& pot, const std::vector<double>& energies) {
  const double t0 = pot.params().period();
  std::vector<double> shift(energies.size(), 0.0);
  std::vector<std::string> failure(energies.size());
  parallel_for(0, energies.size(), [&](std::size_t i) {
    try {
      shift[i] = t0 / period_direct(pot, energies[i]) - 1.0;
    } catch (const Error& e) {
      failure[i] = e.what();
      if (failure[i].empty()) failure[i] = "period evaluation failed";
    }
  });
  std::vector<double> e_ok;
  std::vector<double> s_ok;
  std::vector<FrequencyShiftCurve::Gap> gaps;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (failure[i].empty()) {
      e_ok.push_back(energies[i]);
      s_ok.push_back(shift[i]);
    } else {
      gaps.push_back({energies[i], failure[i]});
    }
  }
  return FrequencyShiftCurve(std::move(e_ok), std::move(s_ok), std::move(gaps));
}

Ensemble angle_evolution(const Ensemble& ens, const Potential1D& pot, const FrequencyShiftCurve& curve, double t) {
  ens.validate();
  if (!std::isfinite(t)) throw InputError("angle_evolution: t must be finite");
  const double omega0 = ens.params.omega0;
  const double scale = ens.params.mass * omega0;
  const double c = pot.center();
  Ensemble out = ens;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double energy = particle_energy(pot, ens.x[i], ens.p[i]);
    if (!curve.contains(energy)) throw DomainError("angle_evolution: particle energy outside the curve domain");
    const double angle = -(omega0 * (1.0 + curve(energy))) * t;
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    const double q = ens.x[i] - c;
    const double pb = ens.p[i] / scale;
    out.x[i] = c + q * cs - pb * sn;
    out.p[i] = (pb * cs + q * sn) * scale;
  }
  out.time += t;
  return out;
}

}  // namespace phasetomo
