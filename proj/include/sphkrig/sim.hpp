#ifndef SPHKRIG_SIM_HPP
#define SPHKRIG_SIM_HPP

#include <cstdint>
#include <vector>

#include "sphkrig/dataset.hpp"
#include "sphkrig/matrix.hpp"
#include "sphkrig/rng.hpp"
#include "sphkrig/sphere.hpp"

namespace sphkrig {

enum class Scenario { StationaryGP, LocalExtremes, NonstationaryWH };
enum class NoiseKind { Clean, Gaussian, Outliers };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Clean;
  double gaussian_sd = 0.5;
  double outlier_frac = 0.02;   // fraction of training observations
  double outlier_factor = 5.0;  // multiplicative
};

struct ScenarioConfig {
  Scenario scenario = Scenario::StationaryGP;
  std::size_t n = 2500;
  NoiseSpec noise;
  std::uint64_t seed = 1;
  // (i) stationary process: exponential correlation.
  double gp_mean = 1.0;
  double gp_var = 1.0;
  double gp_range = 0.5;
  // (iii) latent field behind the Wilson-Hilferty transform.
  double wh_a = 2.0;
  double wh_b = 1.0;
  double wh_var = 0.1;
  double wh_range = 1.5;
  std::size_t anomaly_count = 60;

  void validate() const;
};

struct SimulatedField {
  std::vector<SphereLocation> locations;
  Vector y_true;
  Vector z_obs;
  std::vector<char> outlier_mask;  // only ever set on training indices
};

// phi ~ Unif(0, 2pi), u ~ Unif(-1, 1); lon = phi - pi, lat = arcsin(u).
std::vector<SphereLocation> sample_uniform_sphere(std::size_t n, Rng& rng);

// Zero-mean draw from a GP with covariance var * exp(-gamma/range) on the
// great-arc distance, via Cholesky with starting jitter 1e-10.
Vector sample_exponential_gp(const std::vector<SphereLocation>& locs, double var, double range,
                             Rng& rng);

// Macroscopic trend of scenario (ii): baseline, peaks at +-45 deg latitude,
// an equatorial drop, and an open-interval block drop. Angles in radians.
double f_macro(double lon, double lat);

// Scenario generators. Each consumes the rng in a fixed documented order
// (locations first, then field-specific draws), so fields are reproducible
// bit for bit from the seed.
SimulatedField gen_stationary_gp(const ScenarioConfig& config, Rng& rng);
SimulatedField gen_local_extremes(const ScenarioConfig& config, Rng& rng);
SimulatedField gen_nonstationary_wh(const ScenarioConfig& config, Rng& rng);
SimulatedField generate(const ScenarioConfig& config, Rng& rng);

// E[eta] of the Wilson-Hilferty transform in closed form (third Gaussian
// moment): (a/b) (mu^3 + 3 mu sigma^2).
double wh_eta_mean(double a, double b, double kappa_mean, double kappa_var);

// Applies the configured contamination in place. Gaussian noise hits every
// index; outliers multiply floor(frac * |train|) (at least one) training
// observations by the factor and record them in the mask.
void contaminate(SimulatedField& field, const NoiseSpec& noise, const SplitIndices& split,
                 Rng& rng);

}  // namespace sphkrig

#endif
