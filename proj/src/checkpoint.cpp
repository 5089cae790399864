#include "sphkrig/checkpoint.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "sphkrig/csv.hpp"
#include "sphkrig/errors.hpp"
#include "sphkrig/version.hpp"

namespace sphkrig {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* family_name(BasisFamily f) {
  switch (f) {
    case BasisFamily::SphericalMrts: return "spherical_mrts";
    case BasisFamily::EuclideanMrts: return "euclidean_mrts";
    case BasisFamily::WendlandMulti: return "wendland";
  }
  return "?";
}

Matrix row_tensor(const Vector& v) {
  Matrix m(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m(0, i) = v[i];
  return m;
}

Vector tensor_row(const Matrix& m) {
  Vector v(m.cols());
  for (std::size_t i = 0; i < m.cols(); ++i) v[i] = m(0, i);
  return v;
}

void put_basis(Checkpoint& c, const std::string& prefix, const BasisSystem& b) {
  c.meta[prefix + "family"] = family_name(b.family);
  c.meta[prefix + "k_active"] = std::to_string(b.k_active);
  if (b.family == BasisFamily::WendlandMulti) {
    Matrix scales(b.wendland_scales.size(), 2);
    for (std::size_t i = 0; i < b.wendland_scales.size(); ++i) {
      scales(i, 0) = static_cast<double>(b.wendland_scales[i].grid_count);
      scales(i, 1) = b.wendland_scales[i].range;
    }
    c.tensors[prefix + "scales"] = std::move(scales);
    return;
  }
  Matrix knots(b.knots.size(), 2);
  for (std::size_t i = 0; i < b.knots.size(); ++i) {
    knots(i, 0) = b.knots[i].lon;
    knots(i, 1) = b.knots[i].lat;
  }
  c.tensors[prefix + "knots"] = std::move(knots);
  c.tensors[prefix + "eig_values"] = row_tensor(b.eig.values);
  c.tensors[prefix + "eig_vectors"] = b.eig.vectors;
  c.tensors[prefix + "row_means"] = row_tensor(b.kernel_row_means);
}

BasisSystem get_basis(const Checkpoint& c, const std::string& prefix) {
  BasisSystem b;
  const std::string fam = c.meta.at(prefix + "family");
  b.k_active = std::stoul(c.meta.at(prefix + "k_active"));
  if (fam == "wendland") {
    const Matrix& scales = c.tensors.at(prefix + "scales");
    std::vector<WendlandScale> s;
    for (std::size_t i = 0; i < scales.rows(); ++i)
      s.push_back({static_cast<std::size_t>(scales(i, 0)), scales(i, 1)});
    return build_wendland_multi(std::move(s));
  }
  b.family = fam == "spherical_mrts" ? BasisFamily::SphericalMrts : BasisFamily::EuclideanMrts;
  const Matrix& knots = c.tensors.at(prefix + "knots");
  for (std::size_t i = 0; i < knots.rows(); ++i)
    b.knots.push_back(from_lonlat(knots(i, 0), knots(i, 1)));
  b.eig.values = tensor_row(c.tensors.at(prefix + "eig_values"));
  b.eig.vectors = c.tensors.at(prefix + "eig_vectors");
  b.kernel_row_means = tensor_row(c.tensors.at(prefix + "row_means"));
  return b;
}

void put_mlp(Checkpoint& c, const MlpModel& m) {
  c.meta["nn_blocks"] = std::to_string(m.blocks.size());
  c.meta["nn_input_dim"] = std::to_string(m.input_dim);
  for (std::size_t l = 0; l < m.blocks.size(); ++l) {
    const std::string p = "nn" + std::to_string(l) + "_";
    const auto& blk = m.blocks[l];
    c.tensors[p + "w"] = blk.weights;
    c.tensors[p + "b"] = row_tensor(blk.bias);
    c.tensors[p + "gamma"] = row_tensor(blk.bn_gamma);
    c.tensors[p + "beta"] = row_tensor(blk.bn_beta);
    c.tensors[p + "run_mean"] = row_tensor(blk.bn_run_mean);
    c.tensors[p + "run_var"] = row_tensor(blk.bn_run_var);
  }
  c.tensors["nn_out_w"] = row_tensor(m.out_weights);
  Matrix ob(1, 1);
  ob(0, 0) = m.out_bias;
  c.tensors["nn_out_b"] = std::move(ob);
}

MlpModel get_mlp(const Checkpoint& c) {
  MlpModel m;
  const std::size_t blocks = std::stoul(c.meta.at("nn_blocks"));
  m.input_dim = std::stoul(c.meta.at("nn_input_dim"));
  for (std::size_t l = 0; l < blocks; ++l) {
    const std::string p = "nn" + std::to_string(l) + "_";
    MlpLayer blk;
    blk.weights = c.tensors.at(p + "w");
    blk.bias = tensor_row(c.tensors.at(p + "b"));
    blk.bn_gamma = tensor_row(c.tensors.at(p + "gamma"));
    blk.bn_beta = tensor_row(c.tensors.at(p + "beta"));
    blk.bn_run_mean = tensor_row(c.tensors.at(p + "run_mean"));
    blk.bn_run_var = tensor_row(c.tensors.at(p + "run_var"));
    m.blocks.push_back(std::move(blk));
  }
  m.out_weights = tensor_row(c.tensors.at("nn_out_w"));
  m.out_bias = c.tensors.at("nn_out_b")(0, 0);
  return m;
}

}  // namespace

std::string checkpoint_to_text(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  for (const auto& [key, value] : ckpt.meta) out << "meta " << key << ' ' << value << '\n';
  for (const auto& [name, tensor] : ckpt.tensors) {
    out << "tensor " << name << ' ' << tensor.rows() << ' ' << tensor.cols() << '\n';
    for (std::size_t i = 0; i < tensor.rows(); ++i) {
      for (std::size_t j = 0; j < tensor.cols(); ++j)
        out << (j ? " " : "") << fmt17(tensor(i, j));
      out << '\n';
    }
  }
  out << "end\n";
  return out.str();
}

Checkpoint checkpoint_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kCheckpointMagic) throw DataError("checkpoint: bad magic '" + magic + "'");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint c;
  std::string tok;
  while (in >> tok) {
    if (tok == "end") return c;
    if (tok == "meta") {
      std::string key;
      in >> key;
      std::string value;
      std::getline(in, value);
      const std::size_t a = value.find_first_not_of(" \t");
      c.meta[key] = a == std::string::npos ? "" : value.substr(a);
    } else if (tok == "tensor") {
      std::string name;
      std::size_t rows, cols;
      in >> name >> rows >> cols;
      Matrix t(rows, cols);
      for (double& v : t.data())
        if (!(in >> v)) throw DataError("checkpoint: truncated tensor " + name);
      c.tensors[name] = std::move(t);
    } else {
      throw DataError("checkpoint: unexpected token '" + tok + "'");
    }
  }
  throw DataError("checkpoint: missing end marker");
}

Vector FittedModel::predict_at(const std::vector<SphereLocation>& locations) const {
  switch (kind) {
    case ModelKind::DkW:
    case ModelKind::DkMrts:
    case ModelKind::DkS:
    case ModelKind::DkSH:
      return forward_infer(*nn, eval_features(*basis, locations));
    case ModelKind::OlsW:
    case ModelKind::OlsS:
      return predict(*ols, locations);
    case ModelKind::Uk:
      return predict(*uk, locations);
  }
  throw std::logic_error("predict_at: unknown model kind");
}

void save_model(const std::string& path, const FittedModel& model) {
  Checkpoint c;
  c.meta["model"] = model_name(model.kind);
  switch (model.kind) {
    case ModelKind::DkW:
    case ModelKind::DkMrts:
    case ModelKind::DkS:
    case ModelKind::DkSH:
      put_basis(c, "basis_", *model.basis);
      put_mlp(c, *model.nn);
      break;
    case ModelKind::OlsW:
    case ModelKind::OlsS:
      put_basis(c, "basis_", model.ols->basis);
      c.tensors["ols_coefficients"] = row_tensor(model.ols->coefficients);
      c.meta["ols_ridge"] = fmt17(model.ols->ridge_used);
      break;
    case ModelKind::Uk: {
      const UkModel& uk = *model.uk;
      put_basis(c, "basis_", uk.basis);
      c.tensors["uk_trend"] = row_tensor(uk.trend_coefficients);
      Matrix locs(uk.train_locations.size(), 2);
      for (std::size_t i = 0; i < uk.train_locations.size(); ++i) {
        locs(i, 0) = uk.train_locations[i].lon;
        locs(i, 1) = uk.train_locations[i].lat;
      }
      c.tensors["uk_train_locations"] = std::move(locs);
      c.tensors["uk_residuals"] = row_tensor(uk.train_residuals);
      if (!uk.dual_weights.empty()) c.tensors["uk_dual_weights"] = row_tensor(uk.dual_weights);
      Matrix cov(1, 4);
      cov(0, 0) = uk.cov.nugget;
      cov(0, 1) = uk.cov.sill;
      cov(0, 2) = uk.cov.range;
      cov(0, 3) = uk.cov.fallback ? 1.0 : 0.0;
      c.tensors["uk_cov"] = std::move(cov);
      c.meta["uk_neighbor_cap"] = std::to_string(uk.neighbor_cap);
      break;
    }
  }
  write_text_atomic(path, checkpoint_to_text(c));
}

FittedModel load_model(const std::string& path) {
  const Checkpoint c = checkpoint_from_text(read_text(path));
  FittedModel model;
  model.kind = model_from_name(c.meta.at("model"));
  switch (model.kind) {
    case ModelKind::DkW:
    case ModelKind::DkMrts:
    case ModelKind::DkS:
    case ModelKind::DkSH:
      model.basis = get_basis(c, "basis_");
      model.nn = get_mlp(c);
      break;
    case ModelKind::OlsW:
    case ModelKind::OlsS: {
      OlsModel ols;
      ols.basis = get_basis(c, "basis_");
      ols.coefficients = tensor_row(c.tensors.at("ols_coefficients"));
      ols.ridge_used = std::stod(c.meta.at("ols_ridge"));
      model.ols = std::move(ols);
      break;
    }
    case ModelKind::Uk: {
      UkModel uk;
      uk.basis = get_basis(c, "basis_");
      uk.trend_coefficients = tensor_row(c.tensors.at("uk_trend"));
      const Matrix& locs = c.tensors.at("uk_train_locations");
      for (std::size_t i = 0; i < locs.rows(); ++i)
        uk.train_locations.push_back(from_lonlat(locs(i, 0), locs(i, 1)));
      uk.train_residuals = tensor_row(c.tensors.at("uk_residuals"));
      if (c.tensors.count("uk_dual_weights"))
        uk.dual_weights = tensor_row(c.tensors.at("uk_dual_weights"));
      const Matrix& cov = c.tensors.at("uk_cov");
      uk.cov.nugget = cov(0, 0);
      uk.cov.sill = cov(0, 1);
      uk.cov.range = cov(0, 2);
      uk.cov.fallback = cov(0, 3) != 0.0;
      uk.neighbor_cap = std::stoul(c.meta.at("uk_neighbor_cap"));
      model.uk = std::move(uk);
      break;
    }
  }
  return model;
}

}  // namespace sphkrig
