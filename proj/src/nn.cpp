#include "sphkrig/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sphkrig/errors.hpp"
#include "sphkrig/kernels.hpp"
#include "sphkrig/linalg.hpp"
#include "sphkrig/rng.hpp"

namespace sphkrig {

double loss_value(const LossSpec& loss, double residual) {
  if (loss.kind == LossKind::Mse) return residual * residual;
  const double d = loss.huber_delta;
  const double a = std::fabs(residual);
  if (a <= d) return 0.5 * residual * residual;
  return d * (a - 0.5 * d);
}

double loss_grad_wrt_pred(const LossSpec& loss, double residual) {
  // residual = z - yhat, so d contribution / d yhat = -d/d r.
  if (loss.kind == LossKind::Mse) return -2.0 * residual;
  const double d = loss.huber_delta;
  if (std::fabs(residual) <= d) return -residual;
  return residual > 0.0 ? -d : d;
}

std::vector<ParamView> MlpModel::trainable_params() {
  std::vector<ParamView> views;
  for (auto& blk : blocks) {
    views.push_back({blk.weights.data().data(), blk.weights.data().size()});
    views.push_back({blk.bias.data(), blk.bias.size()});
    views.push_back({blk.bn_gamma.data(), blk.bn_gamma.size()});
    views.push_back({blk.bn_beta.data(), blk.bn_beta.size()});
  }
  views.push_back({out_weights.data(), out_weights.size()});
  views.push_back({&out_bias, 1});
  return views;
}

std::size_t MlpModel::param_count() const {
  std::size_t n = out_weights.size() + 1;
  for (const auto& blk : blocks)
    n += blk.weights.data().size() + blk.bias.size() + blk.bn_gamma.size() + blk.bn_beta.size();
  return n;
}

std::vector<ParamView> Gradients::params() {
  std::vector<ParamView> views;
  for (auto& blk : blocks) {
    views.push_back({blk.weights.data().data(), blk.weights.data().size()});
    views.push_back({blk.bias.data(), blk.bias.size()});
    views.push_back({blk.bn_gamma.data(), blk.bn_gamma.size()});
    views.push_back({blk.bn_beta.data(), blk.bn_beta.size()});
  }
  views.push_back({out_weights.data(), out_weights.size()});
  views.push_back({&out_bias, 1});
  return views;
}

MlpModel init_mlp(std::size_t input_dim, const std::vector<std::size_t>& widths,
                  std::uint64_t seed) {
  if (input_dim == 0) throw std::invalid_argument("init_mlp: zero input dimension");
  if (widths.empty()) throw std::invalid_argument("init_mlp: no hidden layers");
  Rng rng(seed);
  MlpModel model;
  model.input_dim = input_dim;
  std::size_t fan_in = input_dim;
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("init_mlp: zero-width layer");
    MlpLayer blk;
    blk.weights = Matrix(w, fan_in);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& x : blk.weights.data()) x = rng.uniform(-limit, limit);
    blk.bias.assign(w, 0.0);
    blk.bn_gamma.assign(w, 1.0);
    blk.bn_beta.assign(w, 0.0);
    blk.bn_run_mean.assign(w, 0.0);
    blk.bn_run_var.assign(w, 1.0);
    model.blocks.push_back(std::move(blk));
    fan_in = w;
  }
  model.out_weights.resize(fan_in);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& x : model.out_weights) x = rng.uniform(-limit, limit);
  model.out_bias = 0.0;
  return model;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (epochs_max < 1) throw std::invalid_argument("config: epochs_max must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("config: dropout_rate must lie in [0, 1)");
  if (loss.kind == LossKind::Huber && !(loss.huber_delta > 0.0))
    throw std::invalid_argument("config: Huber delta must be > 0");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0))
    throw std::invalid_argument("config: bn_momentum must lie in (0, 1]");
  if (hidden_widths.empty()) throw std::invalid_argument("config: no hidden layers");
}

namespace {

void add_bias_rows(Matrix& z, const Vector& bias) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double* row = z.row(i);
    for (std::size_t j = 0; j < z.cols(); ++j) row[j] += bias[j];
  }
}

void batch_stats(const Matrix& z, Vector& mean, Vector& var) {
  const std::size_t n = z.rows(), d = z.cols();
  mean.assign(d, 0.0);
  var.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = z.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = z.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - mean[j];
      var[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) var[j] /= static_cast<double>(n);
}

}  // namespace

Vector forward_infer(const MlpModel& model, const Matrix& features) {
  if (features.cols() != model.input_dim)
    throw std::invalid_argument("forward: feature width " + std::to_string(features.cols()) +
                                " != input dim " + std::to_string(model.input_dim));
  Matrix h = features;
  for (const auto& blk : model.blocks) {
    Matrix z = kernels::matmul_nt(h, blk.weights);
    add_bias_rows(z, blk.bias);
    const std::size_t d = z.cols();
    for (std::size_t i = 0; i < z.rows(); ++i) {
      double* row = z.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        const double xhat =
            (row[j] - blk.bn_run_mean[j]) / std::sqrt(blk.bn_run_var[j] + kBatchNormEps);
        const double y = blk.bn_gamma[j] * xhat + blk.bn_beta[j];
        row[j] = y > 0.0 ? y : 0.0;
      }
    }
    h = std::move(z);
  }
  Vector out = kernels::matvec(h, model.out_weights);
  for (double& v : out) v += model.out_bias;
  return out;
}

Vector forward_train(const MlpModel& model, const Matrix& features, double dropout_rate,
                     std::uint64_t dropout_seed, ForwardCache& cache) {
  if (features.cols() != model.input_dim)
    throw std::invalid_argument("forward: feature width mismatch");
  if (features.rows() < 2)
    throw std::invalid_argument("forward: training batches need >= 2 rows for batch statistics");

  const std::size_t n = features.rows();
  const std::size_t layers = model.blocks.size();
  cache = ForwardCache{};
  cache.inputs.resize(layers);
  cache.xhat.resize(layers);
  cache.batch_mean.resize(layers);
  cache.batch_var.resize(layers);
  cache.relu_out.resize(layers);
  cache.dropmask.resize(layers);

  Matrix h = features;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& blk = model.blocks[l];
    cache.inputs[l] = h;
    Matrix z = kernels::matmul_nt(h, blk.weights);
    add_bias_rows(z, blk.bias);
    batch_stats(z, cache.batch_mean[l], cache.batch_var[l]);

    const std::size_t d = z.cols();
    Matrix xhat(n, d);
    Matrix act(n, d);
    for (std::size_t j = 0; j < d; ++j) {
      const double inv = 1.0 / std::sqrt(cache.batch_var[l][j] + kBatchNormEps);
      const double mu = cache.batch_mean[l][j];
      const double g = blk.bn_gamma[j], b = blk.bn_beta[j];
      for (std::size_t i = 0; i < n; ++i) {
        const double xh = (z(i, j) - mu) * inv;
        xhat(i, j) = xh;
        const double y = g * xh + b;
        act(i, j) = y > 0.0 ? y : 0.0;
      }
    }
    cache.xhat[l] = std::move(xhat);
    cache.relu_out[l] = act;

    if (dropout_rate > 0.0) {
      Rng rng(mix_seed(dropout_seed, l));
      const double keep = 1.0 - dropout_rate;
      const double scale = 1.0 / keep;
      Matrix mask(n, d);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
          mask(i, j) = rng.uniform01() < keep ? scale : 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) act(i, j) *= mask(i, j);
      cache.dropmask[l] = std::move(mask);
    }
    h = std::move(act);
  }
  cache.final_hidden = h;
  Vector out = kernels::matvec(h, model.out_weights);
  for (double& v : out) v += model.out_bias;
  return out;
}

BatchGrad backward(const MlpModel& model, const Matrix& features, const Vector& targets,
                   const LossSpec& loss, double dropout_rate, std::uint64_t dropout_seed,
                   ForwardCache* cache_out) {
  if (targets.size() != features.rows())
    throw std::invalid_argument("backward: target length != batch rows");

  ForwardCache local;
  ForwardCache& cache = cache_out ? *cache_out : local;
  const Vector pred = forward_train(model, features, dropout_rate, dropout_seed, cache);
  const std::size_t n = features.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  BatchGrad out;
  out.grads.blocks.resize(model.blocks.size());
  Vector gy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = targets[i] - pred[i];
    out.risk += loss_value(loss, r);
    gy[i] = loss_grad_wrt_pred(loss, r) * inv_n;
  }
  out.risk *= inv_n;

  // Output layer.
  const Matrix& hidden = cache.final_hidden;
  out.grads.out_weights = matvec_t(hidden, gy);
  double db_out = 0.0;
  for (double v : gy) db_out += v;
  out.grads.out_bias = db_out;

  // dH = gy outer out_weights.
  Matrix dh(n, model.out_weights.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dh.cols(); ++j) dh(i, j) = gy[i] * model.out_weights[j];

  for (std::size_t li = model.blocks.size(); li-- > 0;) {
    const auto& blk = model.blocks[li];
    auto& g = out.grads.blocks[li];
    const std::size_t d = blk.bias.size();

    // Through dropout and ReLU.
    Matrix dy = std::move(dh);
    if (dropout_rate > 0.0) {
      const Matrix& mask = cache.dropmask[li];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) dy(i, j) *= mask(i, j);
    }
    const Matrix& act = cache.relu_out[li];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (!(act(i, j) > 0.0)) dy(i, j) = 0.0;

    // Batch-norm scale/shift gradients.
    const Matrix& xhat = cache.xhat[li];
    g.bn_gamma.assign(d, 0.0);
    g.bn_beta.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        g.bn_gamma[j] += dy(i, j) * xhat(i, j);
        g.bn_beta[j] += dy(i, j);
      }

    // Through the normalization (batch statistics are functions of the
    // batch): dz = (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat)) / sd.
    Vector m1(d, 0.0), m2(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double dxh = dy(i, j) * blk.bn_gamma[j];
        m1[j] += dxh;
        m2[j] += dxh * xhat(i, j);
      }
    for (std::size_t j = 0; j < d; ++j) {
      m1[j] *= inv_n;
      m2[j] *= inv_n;
    }
    Matrix dz(n, d);
    for (std::size_t j = 0; j < d; ++j) {
      const double inv_sd = 1.0 / std::sqrt(cache.batch_var[li][j] + kBatchNormEps);
      const double gamma = blk.bn_gamma[j];
      for (std::size_t i = 0; i < n; ++i)
        dz(i, j) = (dy(i, j) * gamma - m1[j] - xhat(i, j) * m2[j]) * inv_sd;
    }

    g.bias.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) g.bias[j] += dz(i, j);
    g.weights = kernels::matmul_tn(dz, cache.inputs[li]);

    if (li > 0) dh = kernels::matmul(dz, blk.weights);
  }
  return out;
}

AdamState make_adam_state(std::size_t param_count) {
  AdamState s;
  s.m.assign(param_count, 0.0);
  s.v.assign(param_count, 0.0);
  return s;
}

void adam_step(std::vector<ParamView> params, std::vector<ParamView> grads, AdamState& state,
               const TrainConfig& config) {
  ++state.step;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  std::size_t off = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    double* p = params[t].data;
    const double* g = grads[t].data;
    for (std::size_t i = 0; i < params[t].size; ++i, ++off) {
      state.m[off] = b1 * state.m[off] + (1.0 - b1) * g[i];
      state.v[off] = b2 * state.v[off] + (1.0 - b2) * g[i] * g[i];
      const double mhat = state.m[off] / corr1;
      const double vhat = state.v[off] / corr2;
      p[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
  }
}

namespace {

double risk_infer(const MlpModel& model, const Matrix& features, const Vector& targets,
                  const LossSpec& loss) {
  const Vector pred = forward_infer(model, features);
  double risk = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) risk += loss_value(loss, targets[i] - pred[i]);
  return risk / static_cast<double>(targets.size());
}

}  // namespace

TrainedPredictor train(const Matrix& features, const Vector& targets, const SplitIndices& split,
                       const TrainConfig& config) {
  config.validate();
  if (split.train.empty() || split.val.empty())
    throw std::invalid_argument("train: empty train or validation split");
  if (features.rows() != targets.size())
    throw std::invalid_argument("train: feature rows != target length");

  const Matrix x_train = features.take_rows(split.train);
  const Vector z_train = take(targets, split.train);
  const Matrix x_val = features.take_rows(split.val);
  const Vector z_val = take(targets, split.val);
  const std::size_t n_train = x_train.rows();

  MlpModel model = init_mlp(features.cols(), config.hidden_widths, mix_seed(config.seed, 1));
  AdamState adam = make_adam_state(model.param_count());
  Rng shuffle_rng(mix_seed(config.seed, 2));
  const std::uint64_t dropout_base = mix_seed(config.seed, 3);

  TrainedPredictor best;
  best.best_val_risk = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs_max; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_risk = 0.0;
    std::size_t seen = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n_train; start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(start + config.batch_size, n_train);
      if (stop - start < 2) continue;  // batch variance undefined on singletons
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      const Matrix xb = x_train.take_rows(idx);
      const Vector zb = take(z_train, idx);

      const std::uint64_t mask_seed = mix_seed(mix_seed(dropout_base, epoch), batch_index);
      ForwardCache cache;
      BatchGrad bg = backward(model, xb, zb, config.loss, config.dropout_rate, mask_seed, &cache);
      if (!std::isfinite(bg.risk))
        throw NumericalError("train: non-finite batch risk at epoch " + std::to_string(epoch));
      epoch_risk += bg.risk * static_cast<double>(stop - start);
      seen += stop - start;

      // Refresh running statistics with the batch statistics this step saw.
      for (std::size_t l = 0; l < model.blocks.size(); ++l) {
        auto& blk = model.blocks[l];
        for (std::size_t j = 0; j < blk.bn_run_mean.size(); ++j) {
          blk.bn_run_mean[j] = (1.0 - config.bn_momentum) * blk.bn_run_mean[j] +
                               config.bn_momentum * cache.batch_mean[l][j];
          blk.bn_run_var[j] = (1.0 - config.bn_momentum) * blk.bn_run_var[j] +
                              config.bn_momentum * cache.batch_var[l][j];
        }
      }

      adam_step(model.trainable_params(), bg.grads.params(), adam, config);
    }

    const double train_risk = seen > 0 ? epoch_risk / static_cast<double>(seen) : 0.0;
    const double val_risk = risk_infer(model, x_val, z_val, config.loss);
    if (!std::isfinite(val_risk))
      throw NumericalError("train: non-finite validation risk at epoch " + std::to_string(epoch));
    best.history.emplace_back(train_risk, val_risk);

    if (val_risk < best.best_val_risk) {
      best.best_val_risk = val_risk;
      best.best_epoch = epoch;
      best.model = model;
    }
    if (epoch - best.best_epoch > config.patience) break;
  }
  return best;
}

SelectionResult select_basis_count(std::vector<std::size_t> candidates,
                                   const std::function<Matrix(std::size_t)>& features_for_k,
                                   const Vector& targets, const SplitIndices& split,
                                   const TrainConfig& config) {
  if (candidates.empty()) throw std::invalid_argument("select_basis_count: empty candidate set");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  SelectionResult best;
  double best_risk = std::numeric_limits<double>::infinity();
  for (std::size_t k : candidates) {
    TrainedPredictor fit = train(features_for_k(k), targets, split, config);
    if (fit.best_val_risk < best_risk) {
      best_risk = fit.best_val_risk;
      best.k = k;
      best.predictor = std::move(fit);
    }
  }
  return best;
}

}  // namespace sphkrig
