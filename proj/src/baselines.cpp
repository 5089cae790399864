#include "sphkrig/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sphkrig/kernels.hpp"
#include "sphkrig/linalg.hpp"
#include "sphkrig/parallel.hpp"

namespace sphkrig {

Vector fit_ols_coefficients(const Matrix& features, const Vector& targets) {
  return lstsq_minnorm(features, targets, 0.0);
}

Vector predict_ols_features(const Matrix& features, const Vector& coefficients) {
  return kernels::matvec(features, coefficients);
}

OlsModel fit_ols(BasisSystem basis, const std::vector<SphereLocation>& locations,
                 const Vector& targets) {
  if (locations.size() != targets.size())
    throw std::invalid_argument("fit_ols: locations and targets differ in length");
  OlsModel model;
  model.basis = std::move(basis);
  model.coefficients = fit_ols_coefficients(eval_features(model.basis, locations), targets);
  return model;
}

Vector predict(const OlsModel& model, const std::vector<SphereLocation>& locations) {
  return predict_ols_features(eval_features(model.basis, locations), model.coefficients);
}

VariogramFit fit_exponential_variogram(const std::vector<SphereLocation>& locs,
                                       const Vector& residuals) {
  const std::size_t n = locs.size();
  const std::size_t bins = 15;

  double var = 0.0, mean = 0.0;
  for (double r : residuals) mean += r;
  mean /= static_cast<double>(n);
  for (double r : residuals) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n);

  VariogramFit fallback;
  fallback.sill = std::max(var, 1e-12);
  fallback.range = 0.3;
  fallback.nugget = 0.1 * fallback.sill;
  fallback.fallback = true;
  if (var <= 1e-24) return fallback;

  double h_max = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      h_max = std::max(h_max, great_arc_angle(locs[i], locs[j]));
  if (!(h_max > 0.0)) return fallback;

  // Binned semivariogram up to h_max/2.
  const double cutoff = 0.5 * h_max;
  const double width = cutoff / static_cast<double>(bins);
  std::vector<double> gamma_hat(bins, 0.0);
  std::vector<double> counts(bins, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double h = great_arc_angle(locs[i], locs[j]);
      if (h >= cutoff || h <= 0.0) continue;
      const std::size_t b = std::min(static_cast<std::size_t>(h / width), bins - 1);
      const double d = residuals[i] - residuals[j];
      gamma_hat[b] += 0.5 * d * d;
      counts[b] += 1.0;
    }
  std::vector<double> centers(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    centers[b] = (static_cast<double>(b) + 0.5) * width;
    if (counts[b] > 0.0) gamma_hat[b] /= counts[b];
  }

  // WLS over a fixed geometric range grid; (nugget, sill) linear per range.
  double best_sse = std::numeric_limits<double>::infinity();
  VariogramFit best = fallback;
  for (int step = 0; step < 64; ++step) {
    const double range =
        cutoff / 100.0 * std::pow(200.0, static_cast<double>(step) / 63.0);
    double s11 = 0.0, s12 = 0.0, s22 = 0.0, t1 = 0.0, t2 = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      if (counts[b] == 0.0) continue;
      const double w = counts[b];
      const double f = 1.0 - std::exp(-centers[b] / range);
      s11 += w;
      s12 += w * f;
      s22 += w * f * f;
      t1 += w * gamma_hat[b];
      t2 += w * f * gamma_hat[b];
    }
    const double det = s11 * s22 - s12 * s12;
    if (!(std::fabs(det) > 1e-12 * std::max(s11 * s22, 1e-300))) continue;
    double nugget = (s22 * t1 - s12 * t2) / det;
    double sill = (s11 * t2 - s12 * t1) / det;
    if (nugget < 0.0) {  // refit with nugget pinned at zero
      nugget = 0.0;
      sill = s22 > 0.0 ? t2 / s22 : 0.0;
    }
    if (!(sill > 0.0) || !std::isfinite(sill) || !std::isfinite(nugget)) continue;
    double sse = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      if (counts[b] == 0.0) continue;
      const double f = nugget + sill * (1.0 - std::exp(-centers[b] / range));
      sse += counts[b] * (gamma_hat[b] - f) * (gamma_hat[b] - f);
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = VariogramFit{nugget, sill, range, false};
    }
  }
  return best;
}

namespace {

double cov_at(const VariogramFit& v, double h) { return v.sill * std::exp(-h / v.range); }

}  // namespace

UkModel fit_uk(const std::vector<SphereLocation>& locations, const Vector& targets,
               BasisSystem basis, std::size_t neighbor_cap) {
  const std::size_t n = locations.size();
  if (n < 30) throw std::invalid_argument("fit_uk: need at least 30 observations");
  if (targets.size() != n) throw std::invalid_argument("fit_uk: targets length mismatch");

  UkModel model;
  model.basis = std::move(basis);
  const Matrix features = eval_features(model.basis, locations);
  model.trend_coefficients = fit_ols_coefficients(features, targets);
  const Vector trend = predict_ols_features(features, model.trend_coefficients);

  model.train_locations = locations;
  model.train_residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) model.train_residuals[i] = targets[i] - trend[i];

  model.cov = fit_exponential_variogram(locations, model.train_residuals);
  model.neighbor_cap = neighbor_cap >= n ? 0 : neighbor_cap;

  if (model.neighbor_cap == 0) {
    Matrix c(n, n);
    const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
    for (std::ptrdiff_t i = 0; i < nn; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      for (std::size_t j = 0; j < n; ++j)
        c(ii, j) = cov_at(model.cov, great_arc_angle(locations[ii], locations[j]));
      c(ii, ii) += model.cov.nugget;
    }
    model.dual_weights = chol_solve(cholesky(SymMatrix(std::move(c)), 0.0).lower,
                                    model.train_residuals);
  }
  return model;
}

namespace {

double krige_one(const UkModel& model, const SphereLocation& s) {
  const auto& locs = model.train_locations;
  const std::size_t n = locs.size();
  if (model.neighbor_cap == 0) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += cov_at(model.cov, great_arc_angle(s, locs[i])) * model.dual_weights[i];
    return acc;
  }

  // Local system on the nearest neighbors.
  const std::size_t k = model.neighbor_cap;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = great_arc_angle(s, locs[i]);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&dist](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  Matrix c(k, k);
  Vector c0(k), r(k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b)
      c(a, b) = cov_at(model.cov, great_arc_angle(locs[idx[a]], locs[idx[b]]));
    c(a, a) += model.cov.nugget;
    c0[a] = cov_at(model.cov, dist[idx[a]]);
    r[a] = model.train_residuals[idx[a]];
  }
  const Vector w = chol_solve(cholesky(SymMatrix(std::move(c)), 0.0).lower, c0);
  double acc = 0.0;
  for (std::size_t a = 0; a < k; ++a) acc += w[a] * r[a];
  return acc;
}

}  // namespace

Vector predict(const UkModel& model, const std::vector<SphereLocation>& locations) {
  const Matrix features = eval_features(model.basis, locations);
  Vector out = predict_ols_features(features, model.trend_coefficients);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(locations.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(par::max_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] += krige_one(model, locations[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace sphkrig
