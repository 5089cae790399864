#ifndef SPHKRIG_NN_HPP
#define SPHKRIG_NN_HPP

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "sphkrig/dataset.hpp"
#include "sphkrig/matrix.hpp"

namespace sphkrig {

inline constexpr double kBatchNormEps = 1e-8;

enum class LossKind { Mse, Huber };

struct LossSpec {
  LossKind kind = LossKind::Mse;
  double huber_delta = 1.345;
};

// Per-sample loss contribution as a function of the residual r = z - yhat:
// MSE contributes r^2; Huber contributes r^2/2 inside the threshold and
// delta (|r| - delta/2) beyond it.
double loss_value(const LossSpec& loss, double residual);
// Derivative of the contribution with respect to the prediction.
double loss_grad_wrt_pred(const LossSpec& loss, double residual);

// One hidden block: affine -> batch norm -> ReLU (-> dropout in training).
struct MlpLayer {
  Matrix weights;  // d_out x d_in
  Vector bias;
  Vector bn_gamma, bn_beta;
  Vector bn_run_mean, bn_run_var;
};

struct ParamView {
  double* data;
  std::size_t size;
};

struct MlpModel {
  std::vector<MlpLayer> blocks;
  Vector out_weights;  // d_L
  double out_bias = 0.0;
  std::size_t input_dim = 0;

  // Trainable tensors in a fixed order: per block W, b, gamma, beta; then
  // the output weights and bias. Running statistics are not trainable.
  std::vector<ParamView> trainable_params();
  std::size_t param_count() const;
};

// He-uniform weights, zero biases, identity batch-norm state.
MlpModel init_mlp(std::size_t input_dim, const std::vector<std::size_t>& widths,
                  std::uint64_t seed);

struct TrainConfig {
  LossSpec loss;
  std::size_t epochs_max = 500;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double dropout_rate = 0.2;
  std::size_t patience = 50;
  double bn_momentum = 0.1;
  std::uint64_t seed = 1;
  std::vector<std::size_t> hidden_widths = {100, 100, 100};

  void validate() const;
};

// Per-layer activations and statistics kept for backpropagation.
struct ForwardCache {
  std::vector<Matrix> inputs;     // input of each block (post-dropout upstream)
  std::vector<Matrix> xhat;       // normalized pre-scale activations
  std::vector<Vector> batch_mean;
  std::vector<Vector> batch_var;  // biased (divided by n)
  std::vector<Matrix> relu_out;   // post-ReLU, pre-dropout
  std::vector<Matrix> dropmask;   // scaled keep masks; empty when rate = 0
  Matrix final_hidden;            // network input of the output layer
};

// Inference forward pass: running statistics, no dropout. Row-independent,
// so batching does not change results.
Vector forward_infer(const MlpModel& model, const Matrix& features);

// Training forward pass: batch statistics and (optionally) dropout with a
// deterministic mask derived from dropout_seed. Throws on batches of size 1,
// whose batch variance is undefined.
Vector forward_train(const MlpModel& model, const Matrix& features, double dropout_rate,
                     std::uint64_t dropout_seed, ForwardCache& cache);

struct Gradients {
  std::vector<MlpLayer> blocks;  // only W, b, bn_gamma, bn_beta are used
  Vector out_weights;
  double out_bias = 0.0;

  std::vector<ParamView> params();
};

struct BatchGrad {
  double risk = 0.0;
  Gradients grads;
};

// Exact gradient of the mean batch risk with respect to every trainable
// parameter, including the flow through the batch statistics. When given,
// cache_out receives the underlying training-mode forward cache.
BatchGrad backward(const MlpModel& model, const Matrix& features, const Vector& targets,
                   const LossSpec& loss, double dropout_rate, std::uint64_t dropout_seed,
                   ForwardCache* cache_out = nullptr);

struct AdamState {
  Vector m, v;
  std::size_t step = 0;
};

AdamState make_adam_state(std::size_t param_count);

// Standard bias-corrected Adam update.
void adam_step(std::vector<ParamView> params, std::vector<ParamView> grads, AdamState& state,
               const TrainConfig& config);

struct TrainedPredictor {
  MlpModel model;  // parameters of the best validation epoch
  double best_val_risk = 0.0;
  std::size_t best_epoch = 0;  // 1-based
  std::vector<std::pair<double, double>> history;  // (train_risk, val_risk) per epoch
};

// Mini-batch Adam with early stopping on the validation risk (same loss
// family as training, evaluated in inference mode). Stops once the epochs
// since the best validation epoch exceed `patience` and returns the best
// epoch's parameters, never the last.
TrainedPredictor train(const Matrix& features, const Vector& targets, const SplitIndices& split,
                       const TrainConfig& config);

struct SelectionResult {
  std::size_t k = 0;
  TrainedPredictor predictor;
};

// Trains one predictor per candidate basis count and keeps the smallest
// validation risk; ties break toward the smaller count.
SelectionResult select_basis_count(std::vector<std::size_t> candidates,
                                   const std::function<Matrix(std::size_t)>& features_for_k,
                                   const Vector& targets, const SplitIndices& split,
                                   const TrainConfig& config);

}  // namespace sphkrig

#endif
