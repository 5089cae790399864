#ifndef SPHKRIG_CHECKPOINT_HPP
#define SPHKRIG_CHECKPOINT_HPP

#include <map>
#include <optional>
#include <string>

#include "sphkrig/baselines.hpp"
#include "sphkrig/harness.hpp"
#include "sphkrig/nn.hpp"

namespace sphkrig {

// Versioned text checkpoint: `meta key value` lines plus named tensors with
// a shape header, values written with 17 significant digits so doubles
// round-trip exactly on any platform.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::map<std::string, Matrix> tensors;
};

std::string checkpoint_to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text);

// A fitted predictor of any model family, ready to evaluate at locations.
struct FittedModel {
  ModelKind kind = ModelKind::DkS;
  std::optional<BasisSystem> basis;  // DK models
  std::optional<MlpModel> nn;
  std::optional<OlsModel> ols;
  std::optional<UkModel> uk;

  Vector predict_at(const std::vector<SphereLocation>& locations) const;
};

void save_model(const std::string& path, const FittedModel& model);
FittedModel load_model(const std::string& path);

}  // namespace sphkrig

#endif
