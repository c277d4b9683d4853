#include "phasetomo/phase_space_grid.hpp"

#include <cmath>
#include <numeric>

#include "phasetomo/error.hpp"

namespace phasetomo {

void UniformAxis::validate() const {
  if (n == 0 || !std::isfinite(min) || !std::isfinite(max) || !(max > min)) {
    throw InputError("uniform axis needs n >= 1 and finite min < max");
  }
}

PhaseSpaceGrid::PhaseSpaceGrid(UniformAxis q_axis, UniformAxis p_axis, bool signed_values)
    : q(q_axis), p(p_axis), values(q_axis.n * p_axis.n, 0.0), is_signed(signed_values) {
  q.validate();
  p.validate();
}

double PhaseSpaceGrid::total_mass() const {
  return std::accumulate(values.begin(), values.end(), 0.0) * cell_area();
}

double PhaseSpaceGrid::interpolate(double qv, double pv) const {
  // cell centers on the hull edge can land a few ulps outside it
  constexpr double eps = 1e-9;
  const double hq = static_cast<double>(q.n - 1), hp = static_cast<double>(p.n - 1);
  double fq = q.fractional_index(qv) - 0.5;
  double fp = p.fractional_index(pv) - 0.5;
  if (fq < 0.0 && fq > -eps) fq = 0.0;
  if (fp < 0.0 && fp > -eps) fp = 0.0;
  if (fq > hq && fq < hq + eps) fq = hq;
  if (fp > hp && fp < hp + eps) fp = hp;
  if (fq < 0.0 || fp < 0.0 || fq > static_cast<double>(q.n - 1) || fp > static_cast<double>(p.n - 1)) {
    return 0.0;
  }
  auto iq = static_cast<std::size_t>(fq);
  auto ip = static_cast<std::size_t>(fp);
  if (iq >= q.n - 1) iq = q.n >= 2 ? q.n - 2 : 0;
  if (ip >= p.n - 1) ip = p.n >= 2 ? p.n - 2 : 0;
  const double tq = q.n >= 2 ? fq - static_cast<double>(iq) : 0.0;
  const double tp = p.n >= 2 ? fp - static_cast<double>(ip) : 0.0;
  const std::size_t iq1 = std::min(iq + 1, q.n - 1);
  const std::size_t ip1 = std::min(ip + 1, p.n - 1);
  return (1.0 - tq) * (1.0 - tp) * at(iq, ip) + tq * (1.0 - tp) * at(iq1, ip) + (1.0 - tq) * tp * at(iq, ip1) +
         tq * tp * at(iq1, ip1);
}

void PhaseSpaceGrid::validate() const {
  q.validate();
  p.validate();
  if (values.size() != q.n * p.n) throw InputError("phase-space grid value count does not match axes");
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("phase-space grid contains non-finite values");
    if (!is_signed && v < 0.0) throw InputError("classical phase-space grid contains negative values");
  }
}

PhaseSpaceGrid clip_and_normalize(const PhaseSpaceGrid& grid, double* clipped_fraction) {
  PhaseSpaceGrid out = grid;
  out.is_signed = false;
  double negative = 0.0;
  double absolute = 0.0;
  for (double& v : out.values) {
    absolute += std::abs(v);
    if (v < 0.0) {
      negative += -v;
      v = 0.0;
    }
  }
  if (clipped_fraction) *clipped_fraction = absolute > 0.0 ? negative / absolute : 0.0;
  const double mass = out.total_mass();
  if (mass > 0.0) {
    for (double& v : out.values) v /= mass;
  }
  return out;
}

PhaseSpaceGrid normalize_signed(const PhaseSpaceGrid& grid) {
  const double mass = grid.total_mass();
  if (!(std::abs(mass) > 0.0) || !std::isfinite(mass)) throw InputError("cannot normalize a zero-mass grid");
  PhaseSpaceGrid out = grid;
  for (double& v : out.values) v /= mass;
  return out;
}

}  // namespace phasetomo
