#include "sphkrig/specialfn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sphkrig {

namespace {

constexpr double kPiSq6 = M_PI * M_PI / 6.0;

// Series for y in [0, 1/2]: sum y^k / k^2. Terms shrink by at least half
// per step, so 60 terms is far past double precision.
double dilog_series(double y) {
  double term = y;
  double sum = y;
  for (int k = 2; k <= 60; ++k) {
    term *= y;
    const double add = term / (static_cast<double>(k) * k);
    sum += add;
    if (add < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace

double dilog(double y) {
  if (!(y >= -1e-15) || !(y <= 1.0 + 1e-15))
    throw std::domain_error("dilog: argument outside [0, 1]");
  y = std::clamp(y, 0.0, 1.0);
  if (y == 0.0) return 0.0;
  if (y == 1.0) return kPiSq6;
  if (y <= 0.5) return dilog_series(y);
  // Reflection: Li2(y) = pi^2/6 - ln(y) ln(1-y) - Li2(1-y).
  const double onemy = 1.0 - y;
  return kPiSq6 - std::log(y) * std::log(onemy) - dilog_series(onemy);
}

double sph_tps_kernel_cos(double cos_gamma) {
  cos_gamma = std::clamp(cos_gamma, -1.0, 1.0);
  return dilog(0.5 + 0.5 * cos_gamma) + 1.0 - M_PI / 6.0;
}

double sph_tps_kernel(const SphereLocation& a, const SphereLocation& b) {
  return sph_tps_kernel_cos(dot3(a, b));
}

}  // namespace sphkrig
