#ifndef SPHKRIG_BASIS_HPP
#define SPHKRIG_BASIS_HPP

#include <cstddef>
#include <vector>

#include "sphkrig/linalg.hpp"
#include "sphkrig/matrix.hpp"
#include "sphkrig/sphere.hpp"

namespace sphkrig {

enum class BasisFamily { SphericalMrts, EuclideanMrts, WendlandMulti };

// One Wendland resolution: grid_count knots on a sqrt(grid_count)^2 lon/lat
// grid, with the stated great-arc support range.
struct WendlandScale {
  std::size_t grid_count = 0;
  double range = 0.0;
};

// A built basis, evaluable at any location. For the MRTS families the
// eigendecomposition is of the doubly centered kernel matrix QKQ; slicing a
// smaller k_active reuses it without rebuilding.
struct BasisSystem {
  BasisFamily family = BasisFamily::SphericalMrts;
  std::vector<SphereLocation> knots;
  EigenDecomp eig;                          // MRTS families only
  Vector kernel_row_means;                  // K 1_m / m
  std::vector<WendlandScale> wendland_scales;
  std::size_t k_active = 0;

  std::size_t max_k() const;
};

// Eigen-ordered spherical MRTS over the TPS kernel (k = basis count,
// k <= |knots|). Knots must be pairwise distinct.
BasisSystem build_spherical_mrts(std::vector<SphereLocation> knots, std::size_t k);

// Same construction over the chordal 3-D TPS kernel -||x - x'||.
BasisSystem build_euclidean_mrts(std::vector<SphereLocation> knots, std::size_t k);

// Compactly supported Wendland bases on rectangular lon/lat grids, one grid
// per scale. Every grid_count must be a perfect square.
BasisSystem build_wendland_multi(std::vector<WendlandScale> scales);

// The three-scale 10^2 / 19^2 / 37^2 configuration, each range set to
// 2.5x the grid's equatorial longitude spacing.
std::vector<WendlandScale> default_wendland_scales();

// Re-slices an MRTS system to its first k basis functions.
BasisSystem with_basis_count(const BasisSystem& sys, std::size_t k);

// n x k_active feature matrix, row i = (phi_1(s_i), ..., phi_k(s_i)).
Matrix eval_features(const BasisSystem& sys, const std::vector<SphereLocation>& locs);
Matrix eval_features_serial(const BasisSystem& sys, const std::vector<SphereLocation>& locs);

// Raw Wendland profile w(d) = (1-d)^6 (35 d^2 + 18 d + 3)/3 on [0, 1].
double wendland_value(double d);

}  // namespace sphkrig

#endif
