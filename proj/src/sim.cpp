#include "sphkrig/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sphkrig/kernels.hpp"
#include "sphkrig/linalg.hpp"
#include "sphkrig/parallel.hpp"

namespace sphkrig {

void ScenarioConfig::validate() const {
  if (n < 10) throw std::invalid_argument("scenario: n must be >= 10");
  if (!(noise.outlier_frac > 0.0 && noise.outlier_frac < 1.0))
    throw std::invalid_argument("scenario: outlier fraction must lie in (0, 1)");
  if (noise.outlier_factor == 0.0)
    throw std::invalid_argument("scenario: outlier factor must be nonzero");
  if (!(gp_var > 0.0 && gp_range > 0.0 && wh_var > 0.0 && wh_range > 0.0))
    throw std::invalid_argument("scenario: variance and range parameters must be positive");
}

std::vector<SphereLocation> sample_uniform_sphere(std::size_t n, Rng& rng) {
  std::vector<SphereLocation> locs;
  locs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const double u = rng.uniform(-1.0, 1.0);
    locs.push_back(from_lonlat(phi - M_PI, std::asin(u)));
  }
  return locs;
}

Vector sample_exponential_gp(const std::vector<SphereLocation>& locs, double var, double range,
                             Rng& rng) {
  const std::size_t n = locs.size();
  Matrix cov(n, n);
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
  for (std::ptrdiff_t i = 0; i < nn; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < n; ++j)
      cov(ii, j) = var * std::exp(-great_arc_angle(locs[ii], locs[j]) / range);
  }
  const CholeskyFactor chol = cholesky(SymMatrix(std::move(cov)), 1e-10);

  Vector xi(n);
  for (double& v : xi) v = rng.normal();

  Vector g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) g[i] = kernels::dot(chol.lower.row(i), xi.data(), i + 1);
  return g;
}

double f_macro(double lon, double lat) {
  double v = 5.0;
  v += 18.0 * std::exp(-(lat - M_PI / 4.0) * (lat - M_PI / 4.0) / 0.05);
  v += 22.0 * std::exp(-(lat + M_PI / 4.0) * (lat + M_PI / 4.0) / 0.04);
  v -= 4.0 * std::exp(-lat * lat / 0.01);
  if (lon > 0.0 && lon < 1.0 && lat > 0.1 && lat < 1.0) v -= 12.0;
  return v;
}

namespace {

struct Anomalies {
  std::vector<SphereLocation> anchors;
  Vector amplitude;
  Vector radius;
};

// Draw order per anomaly: location (two uniforms), amplitude, radius.
Anomalies draw_anomalies(std::size_t count, Rng& rng) {
  Anomalies a;
  a.anchors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const double u = rng.uniform(-1.0, 1.0);
    a.anchors.push_back(from_lonlat(phi - M_PI, std::asin(u)));
    a.amplitude.push_back(rng.uniform(-10.0, 18.0));
    a.radius.push_back(rng.uniform(0.005, 0.03));
  }
  return a;
}

// m(s) = max(0.5, f_macro + sum_i A_i exp(-||x(s) - x(a_i)||^2 / r_i)),
// squared chordal distance in the bump.
double extremes_mean(const SphereLocation& s, const Anomalies& a) {
  double v = f_macro(s.lon, s.lat);
  for (std::size_t i = 0; i < a.anchors.size(); ++i) {
    const double d = chord_distance(s, a.anchors[i]);
    v += a.amplitude[i] * std::exp(-d * d / a.radius[i]);
  }
  return std::max(0.5, v);
}

}  // namespace

SimulatedField gen_stationary_gp(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  SimulatedField f;
  f.locations = sample_uniform_sphere(config.n, rng);
  const Vector g = sample_exponential_gp(f.locations, config.gp_var, config.gp_range, rng);
  f.y_true.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) f.y_true[i] = config.gp_mean + g[i];
  f.z_obs = f.y_true;
  f.outlier_mask.assign(config.n, 0);
  return f;
}

SimulatedField gen_local_extremes(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  SimulatedField f;
  f.locations = sample_uniform_sphere(config.n, rng);
  const Anomalies a = draw_anomalies(config.anomaly_count, rng);
  f.y_true.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) f.y_true[i] = extremes_mean(f.locations[i], a);
  f.z_obs = f.y_true;
  f.outlier_mask.assign(config.n, 0);
  return f;
}

double wh_eta_mean(double a, double b, double kappa_mean, double kappa_var) {
  const double c1 = std::sqrt(1.0 / (9.0 * a));
  const double mu = 1.0 - 1.0 / (9.0 * a) + kappa_mean * c1;
  const double sigma2 = c1 * c1 * kappa_var;
  return (a / b) * (mu * mu * mu + 3.0 * mu * sigma2);
}

SimulatedField gen_nonstationary_wh(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  SimulatedField f;
  f.locations = sample_uniform_sphere(config.n, rng);
  const Anomalies anom = draw_anomalies(config.anomaly_count, rng);
  const Vector gp = sample_exponential_gp(f.locations, config.wh_var, config.wh_range, rng);

  const double a = config.wh_a, b = config.wh_b;
  const double c0 = 1.0 - 1.0 / (9.0 * a);
  const double c1 = std::sqrt(1.0 / (9.0 * a));
  const double eta_mean = wh_eta_mean(a, b, 1.0, config.wh_var);

  f.y_true.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const double kappa = 1.0 + gp[i];
    const double x = c0 + kappa * c1;
    const double eta = (a / b) * x * x * x;
    const double m = extremes_mean(f.locations[i], anom);
    f.y_true[i] = std::max(m + (eta - eta_mean), 0.0);
  }
  f.z_obs = f.y_true;
  f.outlier_mask.assign(config.n, 0);
  return f;
}

SimulatedField generate(const ScenarioConfig& config, Rng& rng) {
  switch (config.scenario) {
    case Scenario::StationaryGP:
      return gen_stationary_gp(config, rng);
    case Scenario::LocalExtremes:
      return gen_local_extremes(config, rng);
    case Scenario::NonstationaryWH:
      return gen_nonstationary_wh(config, rng);
  }
  throw std::invalid_argument("generate: unknown scenario");
}

void contaminate(SimulatedField& field, const NoiseSpec& noise, const SplitIndices& split,
                 Rng& rng) {
  const std::size_t n = field.y_true.size();
  field.z_obs = field.y_true;
  field.outlier_mask.assign(n, 0);
  switch (noise.kind) {
    case NoiseKind::Clean:
      return;
    case NoiseKind::Gaussian:
      for (std::size_t i = 0; i < n; ++i) field.z_obs[i] += noise.gaussian_sd * rng.normal();
      return;
    case NoiseKind::Outliers: {
      if (split.train.empty())
        throw std::invalid_argument("contaminate: outliers need a training split");
      std::size_t count = static_cast<std::size_t>(
          std::floor(noise.outlier_frac * static_cast<double>(split.train.size())));
      count = std::max<std::size_t>(count, 1);
      std::vector<std::size_t> pool = split.train;
      rng.shuffle(pool);
      for (std::size_t k = 0; k < count; ++k) {
        field.z_obs[pool[k]] *= noise.outlier_factor;
        field.outlier_mask[pool[k]] = 1;
      }
      return;
    }
  }
}

}  // namespace sphkrig
