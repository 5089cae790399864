#ifndef SPHKRIG_BASELINES_HPP
#define SPHKRIG_BASELINES_HPP

#include <cstddef>
#include <vector>

#include "sphkrig/basis.hpp"
#include "sphkrig/matrix.hpp"
#include "sphkrig/sphere.hpp"

namespace sphkrig {

struct OlsModel {
  BasisSystem basis;
  Vector coefficients;
  double ridge_used = 0.0;
};

// Minimum-norm least squares on precomputed features.
Vector fit_ols_coefficients(const Matrix& features, const Vector& targets);

OlsModel fit_ols(BasisSystem basis, const std::vector<SphereLocation>& locations,
                 const Vector& targets);
Vector predict(const OlsModel& model, const std::vector<SphereLocation>& locations);

struct VariogramFit {
  double nugget = 0.0;
  double sill = 1.0;
  double range = 0.3;
  bool fallback = false;  // set when the WLS fit failed and defaults were used
};

// Binned empirical semivariogram (15 bins up to half the maximum pairwise
// distance) fitted with gamma(h) = nugget + sill (1 - exp(-h/range)) by
// weighted least squares, weights = pair counts, over a deterministic range
// grid. Falls back to (sill = var(residuals), range = 0.3, nugget = 0.1 sill)
// when no valid fit exists.
VariogramFit fit_exponential_variogram(const std::vector<SphereLocation>& locs,
                                       const Vector& residuals);

struct UkModel {
  BasisSystem basis;
  Vector trend_coefficients;
  VariogramFit cov;
  std::vector<SphereLocation> train_locations;
  Vector train_residuals;
  std::size_t neighbor_cap = 0;  // 0 = use every training residual
  Vector dual_weights;           // C^{-1} r, precomputed when neighbor_cap = 0
};

// Trend by OLS on the basis features, exponential variogram on the
// residuals, then residual kriging (dual form when neighbor_cap = 0, local
// systems on the nearest neighbors otherwise). Needs n >= 30.
UkModel fit_uk(const std::vector<SphereLocation>& locations, const Vector& targets,
               BasisSystem basis, std::size_t neighbor_cap);

Vector predict(const UkModel& model, const std::vector<SphereLocation>& locations);

// Matrix-level OLS prediction used by the replication harness.
Vector predict_ols_features(const Matrix& features, const Vector& coefficients);

}  // namespace sphkrig

#endif
