#ifndef SPHKRIG_SPECIALFN_HPP
#define SPHKRIG_SPECIALFN_HPP

#include "sphkrig/sphere.hpp"

namespace sphkrig {

// Dilogarithm Li2(y) = -integral_0^y log(1-x)/x dx on [0, 1].
// Power series up to y = 1/2, reflection onto [0, 1/2] above; absolute
// error below 1e-15 on the whole interval. Throws std::domain_error
// outside [0, 1].
double dilog(double y);

// Spherical thin-plate-spline kernel
//   Phi(a, b) = Li2((1 + cos gamma)/2) + 1 - pi/6,
// where gamma is the great-arc angle. The argument is formed directly from
// the unit-vector dot product.
double sph_tps_kernel(const SphereLocation& a, const SphereLocation& b);

// Same kernel as a function of cos gamma, for callers that already have the
// dot product in hand.
double sph_tps_kernel_cos(double cos_gamma);

}  // namespace sphkrig

#endif
