#include "phasetomo/ensemble.hpp"

#include <cmath>

#include "phasetomo/error.hpp"
#include "phasetomo/rng.hpp"

namespace phasetomo {

void Ensemble::validate() const {
  if (x.empty()) throw InputError("ensemble must contain at least one particle");
  if (p.size() != x.size() || e_perp.size() != x.size()) throw InputError("ensemble arrays differ in length");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(p[i]) || !std::isfinite(e_perp[i])) {
      throw InputError("ensemble contains non-finite coordinates");
    }
    if (e_perp[i] < 0.0) throw InputError("ensemble contains negative transverse energy");
  }
}

Ensemble sample_ensemble(const PhysicalParams& params, double x_shift, std::size_t n, std::uint64_t seed) {
  params.validate();
  if (n == 0) throw InputError("sample_ensemble: N must be >= 1");
  if (!std::isfinite(x_shift)) throw InputError("sample_ensemble: x_shift must be finite");

  const double kT = params.kT();
  const double sigma_x = std::sqrt(kT / (params.mass * params.omega0 * params.omega0));
  const double sigma_p = std::sqrt(params.mass * kT);

  Ensemble ens;
  ens.params = params;
  ens.seed = seed;
  ens.x.resize(n);
  ens.p.resize(n);
  ens.e_perp.resize(n);

  CounterRng rng(derive_key(seed, 0));
  for (std::size_t i = 0; i < n; ++i) {
    ens.x[i] = x_shift + sigma_x * rng.normal();
    ens.p[i] = sigma_p * rng.normal();
    ens.e_perp[i] = kT * rng.exponential();
  }
  ens.draws = rng.counter();
  return ens;
}

}  // namespace phasetomo
