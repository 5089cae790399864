#include "sphkrig/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sphkrig {

SphereLocation from_lonlat(double lon, double lat) {
  if (!std::isfinite(lon) || !std::isfinite(lat))
    throw std::invalid_argument("from_lonlat: non-finite coordinate");
  if (std::fabs(lat) > M_PI_2 + 1e-12)
    throw std::invalid_argument("from_lonlat: |lat| > pi/2 (" + std::to_string(lat) + ")");
  lat = std::clamp(lat, -M_PI_2, M_PI_2);

  lon = std::remainder(lon, 2.0 * M_PI);  // [-pi, pi]
  if (lon >= M_PI) lon -= 2.0 * M_PI;

  SphereLocation s;
  s.lon = lon;
  s.lat = lat;
  const double cl = std::cos(lat);
  s.unit_vec = {cl * std::cos(lon), cl * std::sin(lon), std::sin(lat)};
  return s;
}

double dot3(const SphereLocation& a, const SphereLocation& b) {
  return a.unit_vec[0] * b.unit_vec[0] + a.unit_vec[1] * b.unit_vec[1] +
         a.unit_vec[2] * b.unit_vec[2];
}

double great_arc_angle(const SphereLocation& a, const SphereLocation& b) {
  const auto& u = a.unit_vec;
  const auto& v = b.unit_vec;
  // atan2 half-angle form: tan(gamma/2) = |a - b| / |a + b|. Accurate at
  // both ends of [0, pi], and exactly symmetric in the arguments (the
  // difference negates component-wise, the sum commutes, so both norms are
  // bit-identical under swap; a cross-product form loses that once the
  // compiler fuses multiply-adds).
  double dn = 0.0, sn = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double d = u[c] - v[c];
    const double s = u[c] + v[c];
    dn += d * d;
    sn += s * s;
  }
  return 2.0 * std::atan2(std::sqrt(dn), std::sqrt(sn));
}

double chord_distance(const SphereLocation& a, const SphereLocation& b) {
  const double dx = a.unit_vec[0] - b.unit_vec[0];
  const double dy = a.unit_vec[1] - b.unit_vec[1];
  const double dz = a.unit_vec[2] - b.unit_vec[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::vector<SphereLocation> fibonacci_knots(std::size_t m) {
  if (m < 4) throw std::invalid_argument("fibonacci_knots: need m >= 4");
  // Offset lattice: z_i = 2(i + 1/2)/m - 1, longitudes advance by the golden
  // angle. Symmetric z keeps the centroid on the equatorial plane.
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<SphereLocation> knots;
  knots.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double z = (2.0 * (static_cast<double>(i) + 0.5)) / static_cast<double>(m) - 1.0;
    const double lat = std::asin(z);
    const double lon = std::remainder(2.0 * M_PI * static_cast<double>(i) / golden, 2.0 * M_PI);
    knots.push_back(from_lonlat(lon, lat));
  }
  return knots;
}

}  // namespace sphkrig
