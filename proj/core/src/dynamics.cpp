#include "phasetomo/dynamics.hpp"

#include <cmath>
#include <numeric>

#include "phasetomo/error.hpp"
#include "phasetomo/parallel.hpp"

namespace phasetomo {

namespace {

struct StepPlan {
  std::size_t steps;
  double dt;
};

StepPlan plan_steps(const PhysicalParams& params, double dt, double t_total) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("integrate: dt must be > 0");
  if (!(t_total >= 0.0) || !std::isfinite(t_total)) throw InputError("integrate: t_total must be >= 0");
  const double dt_max = 2.0 * constants::pi / (50.0 * params.omega0);
  if (dt > dt_max * (1.0 + 1e-12)) throw InputError("integrate: dt exceeds 2π/(50 ω0)");
  if (t_total == 0.0) return {0, dt};
  const auto steps = static_cast<std::size_t>(std::ceil(t_total / dt - 1e-9));
  return {steps, t_total / static_cast<double>(steps)};
}

}  // namespace

Ensemble integrate(const Ensemble& ens, const Potential1D& pot, double dt, double t_total,
                   IntegrationReport* report) {
  ens.validate();
  const auto plan = plan_steps(pot.params(), dt, t_total);
  const double mass = pot.params().mass;
  const double h = plan.dt;

  Ensemble out = ens;
  std::vector<unsigned char> left_domain(out.size(), 0);
  parallel_for(0, out.size(), [&](std::size_t i) {
    double x = out.x[i];
    double p = out.p[i];
    auto s = pot.eval(x);
    bool inside = s.in_domain;
    for (std::size_t k = 0; k < plan.steps; ++k) {
      p += 0.5 * h * s.force;
      x += h * p / mass;
      s = pot.eval(x);
      inside = inside && s.in_domain;
      p += 0.5 * h * s.force;
    }
    out.x[i] = x;
    out.p[i] = p;
    left_domain[i] = inside ? 0 : 1;
  });
  out.time += t_total;

  if (report) {
    report->steps = plan.steps;
    report->dt = plan.dt;
    report->particles_out_of_domain = std::accumulate(left_domain.begin(), left_domain.end(), std::size_t{0});
  }
  return out;
}

Ensemble phase_rotation(const Ensemble& ens, double theta, double center) {
  const double scale = ens.params.mass * ens.params.omega0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Ensemble out = ens;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double q = ens.x[i] - center;
    const double pb = ens.p[i] / scale;
    out.x[i] = center + q * c - pb * s;
    out.p[i] = (pb * c + q * s) * scale;
  }
  return out;
}

PhaseSpaceGrid phase_rotation(const PhaseSpaceGrid& grid, double theta) {
  PhaseSpaceGrid out(grid.q, grid.p, grid.is_signed);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  parallel_for(0, grid.np(), [&](std::size_t ip) {
    const double pv = grid.p.center(ip);
    for (std::size_t iq = 0; iq < grid.nq(); ++iq) {
      const double qv = grid.q.center(iq);
      // Pull back through the inverse rotation.
      out.at(iq, ip) = grid.interpolate(qv * c + pv * s, pv * c - qv * s);
    }
  });
  return out;
}

Ensemble harmonic_evolution(const Ensemble& ens, double t, double center) {
  Ensemble out = phase_rotation(ens, -ens.params.omega0 * t, center);
  out.time += t;
  return out;
}

double particle_energy(const Potential1D& pot, double x, double p) {
  return p * p / (2.0 * pot.params().mass) + pot.eval(x).energy;
}

double PhaseMoments::ellipse_area() const {
  const double det = var_q * var_p - cov_qp * cov_qp;
  return 4.0 * constants::pi * std::sqrt(std::max(det, 0.0));
}

PhaseMoments phase_moments(const Ensemble& ens, double center) {
  ens.validate();
  const double scale = ens.params.mass * ens.params.omega0;
  const auto n = static_cast<double>(ens.size());
  PhaseMoments m;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    m.mean_q += ens.x[i] - center;
    m.mean_p += ens.p[i] / scale;
  }
  m.mean_q /= n;
  m.mean_p /= n;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double dq = ens.x[i] - center - m.mean_q;
    const double dp = ens.p[i] / scale - m.mean_p;
    m.var_q += dq * dq;
    m.var_p += dp * dp;
    m.cov_qp += dq * dp;
  }
  m.var_q /= n;
  m.var_p /= n;
  m.cov_qp /= n;
  return m;
}

std::vector<TrajectorySample> trajectory(const Potential1D& pot, double x0, double p0, double dt, double t_total,
                                         std::size_t stride) {
  const auto plan = plan_steps(pot.params(), dt, t_total);
  if (stride == 0) stride = 1;
  const double mass = pot.params().mass;
  std::vector<TrajectorySample> out;
  out.reserve(plan.steps / stride + 2);
  double x = x0;
  double p = p0;
  auto s = pot.eval(x);
  out.push_back({0.0, x, p});
  for (std::size_t k = 1; k <= plan.steps; ++k) {
    p += 0.5 * plan.dt * s.force;
    x += plan.dt * p / mass;
    s = pot.eval(x);
    p += 0.5 * plan.dt * s.force;
    if (k % stride == 0 || k == plan.steps) out.push_back({plan.dt * static_cast<double>(k), x, p});
  }
  return out;
}

double trajectory_period(const Potential1D& pot, double x0, double p0, double dt, std::size_t n_periods) {
  if (n_periods == 0) throw InputError("trajectory_period: need at least one period");
  const double mass = pot.params().mass;
  const double c = pot.center();
  const double t_limit = 4.0 * static_cast<double>(n_periods + 1) * pot.params().period();
  double x = x0;
  double p = p0;
  auto s = pot.eval(x);
  double t = 0.0;
  std::vector<double> crossings;
  while (crossings.size() < n_periods + 1 && t < t_limit) {
    const double x_prev = x;
    p += 0.5 * dt * s.force;
    x += dt * p / mass;
    s = pot.eval(x);
    p += 0.5 * dt * s.force;
    t += dt;
    if (x_prev - c < 0.0 && x - c >= 0.0) {
      const double frac = (c - x_prev) / (x - x_prev);
      crossings.push_back(t - dt + frac * dt);
    }
  }
  if (crossings.size() < n_periods + 1) throw DomainError("trajectory_period: orbit does not cross the trap center");
  return (crossings.back() - crossings.front()) / static_cast<double>(n_periods);
}

}  // namespace phasetomo
