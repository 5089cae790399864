#include "sphkrig/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sphkrig/kernels.hpp"
#include "sphkrig/parallel.hpp"
#include "sphkrig/specialfn.hpp"

namespace sphkrig {

namespace {

double mrts_kernel(BasisFamily family, const SphereLocation& a, const SphereLocation& b) {
  if (family == BasisFamily::SphericalMrts) return sph_tps_kernel(a, b);
  return -chord_distance(a, b);
}

void check_distinct(const std::vector<SphereLocation>& knots) {
  for (std::size_t i = 0; i < knots.size(); ++i)
    for (std::size_t j = i + 1; j < knots.size(); ++j)
      if (great_arc_angle(knots[i], knots[j]) < 1e-10)
        throw std::invalid_argument("mrts: duplicate knots at indices " + std::to_string(i) +
                                    " and " + std::to_string(j));
}

BasisSystem build_mrts(BasisFamily family, std::vector<SphereLocation> knots, std::size_t k) {
  const std::size_t m = knots.size();
  if (k < 1) throw std::invalid_argument("mrts: basis count must be >= 1");
  if (k > m) throw std::invalid_argument("mrts: basis count exceeds knot count");
  check_distinct(knots);

  Matrix km(m, m);
  const std::ptrdiff_t mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
  for (std::ptrdiff_t i = 0; i < mm; ++i)
    for (std::size_t j = 0; j < m; ++j)
      km(i, j) = mrts_kernel(family, knots[static_cast<std::size_t>(i)], knots[j]);

  Vector row_means(m, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += km(i, j);
    row_means[i] = s / static_cast<double>(m);
    grand += s;
  }
  grand /= static_cast<double>(m) * static_cast<double>(m);

  // Double centering: (QKQ)_ij = K_ij - r_i - r_j + mean(K).
  Matrix centered(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      centered(i, j) = km(i, j) - row_means[i] - row_means[j] + grand;

  BasisSystem sys;
  sys.family = family;
  sys.knots = std::move(knots);
  sys.eig = eig_sym(SymMatrix(std::move(centered)));
  sys.kernel_row_means = std::move(row_means);
  sys.k_active = k;
  return sys;
}

double scale_spacing(std::size_t g) { return 2.0 * M_PI / static_cast<double>(g); }

}  // namespace

double wendland_value(double d) {
  if (d < 0.0 || d >= 1.0) return 0.0;
  const double omd = 1.0 - d;
  const double omd2 = omd * omd;
  const double omd6 = omd2 * omd2 * omd2;
  return omd6 * (35.0 * d * d + 18.0 * d + 3.0) / 3.0;
}

std::size_t BasisSystem::max_k() const {
  return family == BasisFamily::WendlandMulti ? knots.size() : knots.size();
}

BasisSystem build_spherical_mrts(std::vector<SphereLocation> knots, std::size_t k) {
  return build_mrts(BasisFamily::SphericalMrts, std::move(knots), k);
}

BasisSystem build_euclidean_mrts(std::vector<SphereLocation> knots, std::size_t k) {
  return build_mrts(BasisFamily::EuclideanMrts, std::move(knots), k);
}

BasisSystem build_wendland_multi(std::vector<WendlandScale> scales) {
  if (scales.empty()) throw std::invalid_argument("wendland: no scales given");
  BasisSystem sys;
  sys.family = BasisFamily::WendlandMulti;
  for (const auto& sc : scales) {
    const auto g = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(sc.grid_count))));
    if (g * g != sc.grid_count)
      throw std::invalid_argument("wendland: grid count " + std::to_string(sc.grid_count) +
                                  " is not a perfect square");
    if (!(sc.range > 0.0)) throw std::invalid_argument("wendland: range must be positive");
    // lat-major grid: latitudes span [-pi/2, pi/2] inclusive, longitudes
    // [-pi, pi) half-open.
    for (std::size_t i = 0; i < g; ++i) {
      const double lat = (g == 1) ? 0.0
                                  : -M_PI_2 + M_PI * static_cast<double>(i) / static_cast<double>(g - 1);
      for (std::size_t j = 0; j < g; ++j) {
        const double lon = -M_PI + 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(g);
        sys.knots.push_back(from_lonlat(lon, lat));
      }
    }
  }
  sys.wendland_scales = std::move(scales);
  sys.k_active = sys.knots.size();
  return sys;
}

std::vector<WendlandScale> default_wendland_scales() {
  std::vector<WendlandScale> scales;
  for (std::size_t g : {10u, 19u, 37u})
    scales.push_back({g * g, 2.5 * scale_spacing(g)});
  return scales;
}

BasisSystem with_basis_count(const BasisSystem& sys, std::size_t k) {
  if (sys.family == BasisFamily::WendlandMulti)
    throw std::invalid_argument("with_basis_count: Wendland systems have a fixed basis count");
  if (k < 1 || k > sys.knots.size())
    throw std::invalid_argument("with_basis_count: k outside [1, m]");
  BasisSystem out = sys;
  out.k_active = k;
  return out;
}

namespace {

// Shared per-location row fillers so the serial and OpenMP paths are
// bit-identical.

void mrts_kernel_row(const BasisSystem& sys, const SphereLocation& loc, double* out) {
  const std::size_t m = sys.knots.size();
  for (std::size_t j = 0; j < m; ++j)
    out[j] = mrts_kernel(sys.family, loc, sys.knots[j]) - sys.kernel_row_means[j];
}

void wendland_row(const BasisSystem& sys, const std::vector<double>& inv_range,
                  const SphereLocation& loc, double* out) {
  const std::size_t m = sys.knots.size();
  for (std::size_t j = 0; j < m; ++j)
    out[j] = wendland_value(great_arc_angle(loc, sys.knots[j]) * inv_range[j]);
}

template <bool Parallel>
Matrix eval_impl(const BasisSystem& sys, const std::vector<SphereLocation>& locs) {
  const std::size_t n = locs.size();
  const std::size_t k = sys.k_active;
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);

  if (sys.family == BasisFamily::WendlandMulti) {
    std::vector<double> inv_range;
    for (const auto& sc : sys.wendland_scales)
      inv_range.insert(inv_range.end(), sc.grid_count, 1.0 / sc.range);
    Matrix f(n, k);
#pragma omp parallel for schedule(static) num_threads(par::max_threads()) if (Parallel)
    for (std::ptrdiff_t i = 0; i < nn; ++i)
      wendland_row(sys, inv_range, locs[static_cast<std::size_t>(i)], f.row(i));
    return f;
  }

  // MRTS: phi_1 = m^{-1/2}; phi_{j+1}(s) = (k(s) - K1/m)^T v_j / Lambda_j.
  const std::size_t m = sys.knots.size();
  Matrix centered_rows(n, m);
#pragma omp parallel for schedule(static) num_threads(par::max_threads()) if (Parallel)
  for (std::ptrdiff_t i = 0; i < nn; ++i)
    mrts_kernel_row(sys, locs[static_cast<std::size_t>(i)], centered_rows.row(i));

  // Eigenvector columns pre-scaled by 1/Lambda; one matmul finishes the job.
  Matrix scaled_vecs(m, k - 1);
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const double inv = 1.0 / sys.eig.values[j];
    for (std::size_t r = 0; r < m; ++r) scaled_vecs(r, j) = sys.eig.vectors(r, j) * inv;
  }
  Matrix proj = Parallel ? kernels::matmul(centered_rows, scaled_vecs)
                         : kernels::matmul_serial(centered_rows, scaled_vecs);

  Matrix f(n, k);
  const double first = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < n; ++i) {
    f(i, 0) = first;
    for (std::size_t j = 0; j + 1 < k; ++j) f(i, j + 1) = proj(i, j);
  }
  return f;
}

}  // namespace

Matrix eval_features(const BasisSystem& sys, const std::vector<SphereLocation>& locs) {
  return eval_impl<true>(sys, locs);
}

Matrix eval_features_serial(const BasisSystem& sys, const std::vector<SphereLocation>& locs) {
  return eval_impl<false>(sys, locs);
}

}  // namespace sphkrig
