#ifndef SPHKRIG_HARNESS_HPP
#define SPHKRIG_HARNESS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sphkrig/dataset.hpp"
#include "sphkrig/nn.hpp"
#include "sphkrig/rng.hpp"
#include "sphkrig/sim.hpp"

namespace sphkrig {

// Uniform random partition at the given proportions (which must sum to 1).
// Sizes: |val| = floor(p_val n), |test| = floor(p_test n), remainder to train.
SplitIndices split(std::size_t n, const std::array<double, 3>& proportions, Rng& rng);

double rmse(const Vector& actual, const Vector& predicted);
double mae(const Vector& actual, const Vector& predicted);

enum class ModelKind { OlsW, OlsS, DkW, DkMrts, DkS, DkSH, Uk };

const char* model_name(ModelKind kind);
ModelKind model_from_name(const std::string& name);
std::vector<ModelKind> all_models();

struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<ModelKind> models = all_models();
  std::size_t reps = 10;
  std::uint64_t master_seed = 1;
  std::size_t mrts_knots = 400;
  std::vector<std::size_t> k_candidates = {25, 50, 100, 200, 400};
  TrainConfig nn;
  std::size_t uk_full_threshold = 5000;  // above this n, kriging goes local
  std::size_t uk_neighbor_cap = 64;
  int jobs = 0;  // replication-level parallelism; 0 = auto
  bool verbose = false;
};

struct CellResult {
  double rmse = 0.0;
  double mae = 0.0;
  bool failed = false;
  std::string error;
};

struct ModelAggregate {
  double mean_rmse = 0.0, sd_rmse = 0.0;
  double mean_mae = 0.0, sd_mae = 0.0;
  std::size_t successes = 0;
};

struct MetricsReport {
  std::vector<ModelKind> models;
  std::vector<std::vector<CellResult>> cells;  // [replication][model]
  std::vector<ModelAggregate> aggregates;      // per model, from finalize()

  const CellResult& cell(std::size_t rep, ModelKind kind) const;
  const ModelAggregate& aggregate(ModelKind kind) const;

  std::string to_csv() const;
  std::string to_table() const;
};

// Recomputes the per-model aggregates (mean and sample sd over successful
// replications).
void finalize(MetricsReport& report);

// One full study: per replication (seed_r = master ^ splitmix64(r)) generate
// the field, split 80/10/10, contaminate, then fit and score every model on
// the held-out test observations. A model failure marks its cell and the
// remaining models still run.
MetricsReport run_experiment(const ExperimentConfig& config);

}  // namespace sphkrig

#endif
