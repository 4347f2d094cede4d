#include "proxsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace proxsim {

// Box-Muller; u1 is drawn from (0, 1] so the log is finite.
double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

}  // namespace proxsim
