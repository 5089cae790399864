#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sphkrig/basis.hpp"
#include "sphkrig/rng.hpp"
#include "sphkrig/sim.hpp"

using namespace sphkrig;

namespace {

std::vector<SphereLocation> random_points(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_uniform_sphere(n, rng);
}

// Rotation about a fixed axis applied to a location's unit vector.
SphereLocation rotate_z_then_x(const SphereLocation& s, double az, double ax) {
  double x = s.unit_vec[0], y = s.unit_vec[1], z = s.unit_vec[2];
  const double x1 = std::cos(az) * x - std::sin(az) * y;
  const double y1 = std::sin(az) * x + std::cos(az) * y;
  const double y2 = std::cos(ax) * y1 - std::sin(ax) * z;
  const double z2 = std::sin(ax) * y1 + std::cos(ax) * z;
  return from_lonlat(std::atan2(y2, x1), std::asin(std::clamp(z2, -1.0, 1.0)));
}

void check_mrts_structure(const BasisSystem& sys) {
  const std::size_t m = sys.knots.size();
  // Last eigenvalue of QKQ vanishes (centering null space).
  CHECK(sys.eig.values[m - 1] <= 1e-8 * sys.eig.values[0]);

  // First column constant m^{-1/2}; later columns at the knots are the
  // eigenvectors, hence orthonormal and centered.
  const Matrix f = eval_features(sys, sys.knots);
  const double first = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) CHECK(f(i, 0) == first);

  const std::size_t k = sys.k_active;
  for (std::size_t c1 = 1; c1 < k; ++c1) {
    double colsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) colsum += f(i, c1);
    CHECK(std::fabs(colsum) < 1e-8);
    for (std::size_t c2 = c1; c2 < k; ++c2) {
      double dot = 0.0;
      for (std::size_t i = 0; i < m; ++i) dot += f(i, c1) * f(i, c2);
      CHECK(std::fabs(dot - (c1 == c2 ? 1.0 : 0.0)) < 1e-6);
    }
  }
}

}  // namespace

TEST_CASE("spherical MRTS structural identities at the knots") {
  const BasisSystem sys = build_spherical_mrts(fibonacci_knots(100), 100);
  check_mrts_structure(sys);

  // phi_1 is constant away from the knots too.
  const auto pts = random_points(100, 77);
  const Matrix f = eval_features(sys, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(f(i, 0) == 0.1);
}

TEST_CASE("euclidean MRTS passes the same structural checks") {
  const BasisSystem sys = build_euclidean_mrts(fibonacci_knots(80), 80);
  check_mrts_structure(sys);
}

TEST_CASE("mrts input validation") {
  auto knots = fibonacci_knots(10);
  CHECK_THROWS_AS(build_spherical_mrts(knots, 11), std::invalid_argument);
  CHECK_THROWS_AS(build_spherical_mrts(knots, 0), std::invalid_argument);
  knots.push_back(knots[3]);  // exact duplicate
  CHECK_THROWS_AS(build_spherical_mrts(knots, 5), std::invalid_argument);
}

TEST_CASE("basis count slicing matches a fresh smaller evaluation") {
  const BasisSystem full = build_spherical_mrts(fibonacci_knots(50), 50);
  const BasisSystem sliced = with_basis_count(full, 12);
  CHECK(sliced.k_active == 12);
  const auto pts = random_points(40, 5);
  const Matrix f_full = eval_features(full, pts);
  const Matrix f12 = eval_features(sliced, pts);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 12; ++j) CHECK(f12(i, j) == f_full(i, j));
  CHECK_THROWS_AS(with_basis_count(full, 51), std::invalid_argument);
}

TEST_CASE("eigen ordering tracks roughness: total variation grows with k") {
  const BasisSystem sys = build_spherical_mrts(fibonacci_knots(100), 100);
  // Mean absolute increment over short random steps scattered across the
  // whole sphere; rougher functions vary more over the same step length.
  Rng rng(13);
  std::vector<SphereLocation> a, b;
  for (int i = 0; i < 4000; ++i) {
    const SphereLocation p =
        from_lonlat(rng.uniform(-M_PI, M_PI), std::asin(rng.uniform(-1.0, 1.0)));
    a.push_back(p);
    b.push_back(from_lonlat(p.lon + rng.uniform(-0.03, 0.03) / std::max(std::cos(p.lat), 0.05),
                            std::clamp(p.lat + rng.uniform(-0.03, 0.03), -M_PI_2, M_PI_2)));
  }
  const Matrix fa = eval_features(sys, a);
  const Matrix fb = eval_features(sys, b);
  auto tv = [&](std::size_t col) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(fa(i, col) - fb(i, col));
    return s;
  };
  CHECK(tv(49) > tv(1));  // phi_50 vs phi_2
}

TEST_CASE("spherical MRTS construction is rotation invariant") {
  // The kernel depends only on the great-arc angle, so rotating knots and
  // evaluation points together must preserve the eigenvalues and every
  // basis-independent functional of the system. Individual phi_k are only
  // determined up to mixing inside (near-)degenerate eigenvalue clusters,
  // so the check targets the invariant bilinear form
  //   B(s, t) = sum_k Lambda_k phi_{k+1}(s) phi_{k+1}(t)
  //           = (k(s) - K1/m)^T (QKQ)^+ (k(t) - K1/m),
  // which the eigenvalue weighting keeps well conditioned.
  const auto knots = fibonacci_knots(40);
  const auto pts = random_points(25, 3);
  const BasisSystem sys = build_spherical_mrts(knots, 40);

  const double az = 0.81, ax = -1.2;
  std::vector<SphereLocation> knots_rot, pts_rot;
  for (const auto& p : knots) knots_rot.push_back(rotate_z_then_x(p, az, ax));
  for (const auto& p : pts) pts_rot.push_back(rotate_z_then_x(p, az, ax));
  const BasisSystem sys_rot = build_spherical_mrts(knots_rot, 40);

  for (std::size_t k = 0; k < 40; ++k)
    CHECK(std::fabs(sys.eig.values[k] - sys_rot.eig.values[k]) <=
          1e-8 * std::max(1.0, sys.eig.values[0]));

  const Matrix f = eval_features(sys, pts);
  const Matrix f_rot = eval_features(sys_rot, pts_rot);
  auto bilinear = [&](const Matrix& feats, const EigenDecomp& eig, std::size_t i,
                      std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 1; k < 40; ++k) s += eig.values[k - 1] * feats(i, k) * feats(j, k);
    return s;
  };
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i; j < pts.size(); ++j)
      CHECK(std::fabs(bilinear(f, sys.eig, i, j) - bilinear(f_rot, sys_rot.eig, i, j)) < 1e-8);
}

TEST_CASE("wendland profile values") {
  CHECK(wendland_value(0.0) == 1.0);
  CHECK(wendland_value(1.0) == 0.0);
  CHECK(wendland_value(1.5) == 0.0);
  // Direct evaluation of (1-d)^6 (35 d^2 + 18 d + 3)/3 at d = 1/2.
  CHECK(wendland_value(0.5) == doctest::Approx(0.10807291666666667).epsilon(1e-14));
}

TEST_CASE("wendland multi-resolution system") {
  CHECK_THROWS_AS(build_wendland_multi({}), std::invalid_argument);
  CHECK_THROWS_AS(build_wendland_multi({{7, 1.0}}), std::invalid_argument);

  const BasisSystem sys = build_wendland_multi({{16, 1.2}, {25, 0.9}});
  CHECK(sys.knots.size() == 41);
  CHECK(sys.k_active == 41);

  const auto pts = random_points(200, 21);
  const Matrix f = eval_features(sys, pts);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < sys.k_active; ++j) {
      CHECK(f(i, j) >= 0.0);
      const double range = j < 16 ? 1.2 : 0.9;
      if (great_arc_angle(pts[i], sys.knots[j]) >= range) CHECK(f(i, j) == 0.0);
    }

  const auto scales = default_wendland_scales();
  REQUIRE(scales.size() == 3);
  CHECK(scales[0].grid_count == 100);
  CHECK(scales[1].grid_count == 361);
  CHECK(scales[2].grid_count == 1369);
}
