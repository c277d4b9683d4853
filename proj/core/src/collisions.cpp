#include "phasetomo/collisions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "phasetomo/error.hpp"
#include "phasetomo/parallel.hpp"

namespace phasetomo {

double transverse_area(const PhysicalParams& params) {
  return 2.0 * constants::pi * params.kT() / (params.mass * params.omega_perp * params.omega_perp);
}

double relative_speed(double p1, double e1, double p2, double e2, double mass) {
  const double dv = (p1 - p2) / mass;
  return std::sqrt(dv * dv + 2.0 * (e1 + e2) / mass);
}

void scatter_pair(double& p1, double& e1, double& p2, double& e2, double mass, CounterRng& rng) {
  const double v1 = p1 / mass;
  const double v2 = p2 / mass;
  const double v_cm = 0.5 * (v1 + v2);
  const double dv = v1 - v2;
  // Energy in the centre-of-mass frame, transverse energies included.
  const double e_rel = 0.25 * mass * dv * dv + e1 + e2;
  const double u = std::sqrt(4.0 * e_rel / mass);
  const double cos_polar = 2.0 * rng.uniform() - 1.0;
  const double u_axial = u * cos_polar;
  const double e_transverse = std::max(0.0, e_rel - 0.25 * mass * u_axial * u_axial);
  p1 = mass * (v_cm + 0.5 * u_axial);
  p2 = mass * (v_cm - 0.5 * u_axial);
  e1 = 0.5 * e_transverse;
  e2 = 0.5 * e_transverse;
}

Ensemble collision_step(const Ensemble& ens, double dt, double cell_size, std::uint64_t seed,
                        CollisionReport* report) {
  ens.validate();
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw InputError("collision_step: cell_size must be > 0");
  if (!(dt >= 0.0)) throw InputError("collision_step: dt must be >= 0");

  Ensemble out = ens;
  const std::uint64_t step = ens.collision_steps;
  out.collision_steps += 1;
  const double mass = ens.params.mass;
  const double volume = cell_size * transverse_area(ens.params);
  const double rate_factor = ens.params.sigma_el * dt / volume;

  // Bin particles by cell; stable sort keeps index order within each cell.
  std::vector<std::int64_t> cell(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    cell[i] = static_cast<std::int64_t>(std::floor(ens.x[i] / cell_size));
  }
  std::vector<std::size_t> order(ens.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cell[a] < cell[b]; });

  struct Range {
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Range> ranges;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t j = k;
    while (j < order.size() && cell[order[j]] == cell[order[k]]) ++j;
    ranges.push_back({k, j});
    k = j;
  }

  std::vector<CollisionReport> per_cell(ranges.size());
  parallel_for(0, ranges.size(), [&](std::size_t c) {
    const auto [lo, hi] = ranges[c];
    const auto cell_index = static_cast<std::uint64_t>(cell[order[lo]]);
    CounterRng rng(derive_key(seed, step + 1, cell_index));
    auto& rep = per_cell[c];
    for (std::size_t a = lo; a < hi; ++a) {
      for (std::size_t b = a + 1; b < hi; ++b) {
        const std::size_t i = order[a];
        const std::size_t j = order[b];
        const double prob =
            rate_factor * relative_speed(out.p[i], out.e_perp[i], out.p[j], out.e_perp[j], mass);
        rep.pairs_tested += 1;
        rep.max_pair_probability = std::max(rep.max_pair_probability, prob);
        if (rng.uniform() < prob) {
          scatter_pair(out.p[i], out.e_perp[i], out.p[j], out.e_perp[j], mass, rng);
          rep.collisions += 1;
        }
      }
    }
  });

  CollisionReport total;
  for (const auto& r : per_cell) {
    total.collisions += r.collisions;
    total.pairs_tested += r.pairs_tested;
    total.max_pair_probability = std::max(total.max_pair_probability, r.max_pair_probability);
  }
  if (total.max_pair_probability > 0.1) {
    throw InputError("collision_step: per-pair probability exceeds 0.1; reduce dt");
  }
  if (report) *report = total;
  return out;
}

}  // namespace phasetomo
