#ifndef SPHKRIG_SPHERE_HPP
#define SPHKRIG_SPHERE_HPP

#include <array>
#include <cstddef>
#include <vector>

namespace sphkrig {

// A point on the unit sphere. Longitude is stored in [-pi, pi), latitude in
// [-pi/2, pi/2], and the Cartesian unit vector
//   (cos lat cos lon, cos lat sin lon, sin lat)
// is cached at construction.
struct SphereLocation {
  double lon = 0.0;
  double lat = 0.0;
  std::array<double, 3> unit_vec{1.0, 0.0, 0.0};
};

// Normalizes lon into [-pi, pi) and builds the unit vector.
// Throws std::invalid_argument on non-finite input or |lat| > pi/2.
SphereLocation from_lonlat(double lon, double lat);

double dot3(const SphereLocation& a, const SphereLocation& b);

// Great-arc angle in [0, pi], computed as atan2(|a x b|, a . b) which stays
// accurate near 0 and pi where acos(a . b) loses digits.
double great_arc_angle(const SphereLocation& a, const SphereLocation& b);

// Chordal (3-D Euclidean) distance between the unit vectors.
double chord_distance(const SphereLocation& a, const SphereLocation& b);

// m quasi-uniform knots from the Fibonacci spherical lattice; deterministic
// for fixed m. Requires m >= 4.
std::vector<SphereLocation> fibonacci_knots(std::size_t m);

}  // namespace sphkrig

#endif
