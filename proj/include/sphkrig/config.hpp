#ifndef SPHKRIG_CONFIG_HPP
#define SPHKRIG_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sphkrig/harness.hpp"

namespace sphkrig {

// Resolved settings for one CLI run. Resolution order is defaults, then the
// config file, then command-line flags; the final values are echoed into the
// run manifest so a run can be repeated bit for bit.
struct RunConfig {
  std::string scenario = "i";        // i | ii | iii
  std::string noise = "clean";       // clean | gaussian | outliers
  std::size_t n = 2500;
  std::size_t reps = 10;
  std::uint64_t seed = 1;
  std::string basis_family = "spherical_mrts";
  std::size_t knots = 400;
  std::size_t k_active = 0;  // basis dump size; 0 = all knots
  std::vector<std::size_t> k_candidates = {25, 50, 100, 200, 400};
  std::string models = "OLS_W,OLS_S,DK_W,DK_MRTS,DK_S,DK_S_H,UK";
  std::string loss = "mse";
  double huber_delta = 1.345;
  std::size_t epochs_max = 500;
  std::size_t batch_size = 256;
  std::size_t patience = 50;
  double learning_rate = 1e-3;
  double dropout_rate = 0.2;
  double bn_momentum = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::vector<std::size_t> hidden_widths = {100, 100, 100};
  int jobs = 0;
  int threads = 0;  // 0 = SPHKRIG_THREADS env or OpenMP default
};

std::vector<std::string> config_keys();

// Applies "key = value"; throws std::invalid_argument on an unknown key
// (naming the nearest valid one) or a bad value.
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Parses a flat key = value file ('#' comments); errors carry line numbers.
void apply_config_file(RunConfig& config, const std::string& path);

std::string format_config_value(const RunConfig& config, const std::string& key);

// JSON manifest with the resolved config, the command, and the version.
std::string manifest_json(const RunConfig& config, const std::string& command,
                          const std::vector<std::string>& argv);

// Typed views of the string-ish fields.
ScenarioConfig scenario_from_config(const RunConfig& config);
TrainConfig train_from_config(const RunConfig& config);
ExperimentConfig experiment_from_config(const RunConfig& config);

std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace sphkrig

#endif
