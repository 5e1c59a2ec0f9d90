#include "terralabel/rng.hpp"

#include <cmath>
#include <numbers>

namespace terralabel {

double Rng64::normal() {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace terralabel
