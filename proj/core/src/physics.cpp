#include "phasetomo/physics.hpp"

#include <cmath>
#include <string>

#include "phasetomo/error.hpp"

namespace phasetomo {

void PhysicalParams::validate() const {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InputError(std::string("PhysicalParams.") + name + " must be finite and > 0");
    }
  };
  check(mass, "mass");
  check(omega0, "omega0");
  check(omega_perp, "omega_perp");
  check(temperature, "temperature");
  check(sigma_el, "sigma_el");
}

}  // namespace phasetomo
