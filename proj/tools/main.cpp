// sphkrig command-line interface: simulate / basis / fit / predict /
// evaluate / reproduce. Exit codes: 0 ok, 1 usage, 2 data, 3 numerical.

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sphkrig/checkpoint.hpp"
#include "sphkrig/config.hpp"
#include "sphkrig/csv.hpp"
#include "sphkrig/errors.hpp"
#include "sphkrig/parallel.hpp"
#include "sphkrig/version.hpp"

namespace {

using namespace sphkrig;

struct CommonOpts {
  std::string config_path;
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_opts;
};

// Registers --config plus one string flag per config key on a subcommand so
// resolution can honor defaults < file < flags.
void attach_config_flags(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "key = value config file");
  for (const auto& key : config_keys())
    opts.flag_opts[key] = sub->add_option("--" + key, opts.flag_values[key]);
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig config;
  if (!opts.config_path.empty()) apply_config_file(config, opts.config_path);
  for (const auto& [key, opt] : opts.flag_opts)
    if (opt->count() > 0) apply_config_value(config, key, opts.flag_values.at(key));
  if (config.threads > 0) par::set_max_threads(config.threads);
  return config;
}

void write_manifest(const std::string& out_path, const RunConfig& config,
                    const std::string& command, int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  write_text_atomic(out_path + ".manifest.json", manifest_json(config, command, args));
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  const std::size_t x = text.find('x');
  if (x == std::string::npos)
    throw std::invalid_argument("grid: expected LONxLAT, e.g. 360x180");
  return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
}

BasisSystem build_family(const std::string& family, std::size_t knots, std::size_t k) {
  if (family == "wendland") return build_wendland_multi(default_wendland_scales());
  auto pts = fibonacci_knots(knots);
  if (k == 0 || k > knots) k = knots;
  return family == "spherical_mrts" ? build_spherical_mrts(std::move(pts), k)
                                    : build_euclidean_mrts(std::move(pts), k);
}

// Fits one model on a points dataset using an internal 80/10/10 split.
FittedModel fit_single(ModelKind kind, const Dataset& data, const RunConfig& rc) {
  Rng rng(rc.seed);
  const SplitIndices sp = split(data.size(), {0.8, 0.1, 0.1}, rng);
  const std::size_t max_k =
      *std::max_element(rc.k_candidates.begin(), rc.k_candidates.end());
  TrainConfig tc = train_from_config(rc);

  FittedModel out;
  out.kind = kind;
  switch (kind) {
    case ModelKind::DkW: {
      BasisSystem basis = build_wendland_multi(default_wendland_scales());
      const Matrix f = eval_features(basis, data.locations);
      tc.loss.kind = rc.loss == "huber" ? LossKind::Huber : LossKind::Mse;
      TrainedPredictor fit = train(f, data.values, sp, tc);
      std::fprintf(stderr, "DK_W: best val risk %.6g at epoch %zu\n", fit.best_val_risk,
                   fit.best_epoch);
      out.basis = std::move(basis);
      out.nn = std::move(fit.model);
      return out;
    }
    case ModelKind::DkS:
    case ModelKind::DkSH:
    case ModelKind::DkMrts: {
      const std::string family = kind == ModelKind::DkMrts ? "euclidean_mrts" : "spherical_mrts";
      BasisSystem basis = build_family(family, rc.knots, max_k);
      const Matrix f = eval_features(basis, data.locations);
      tc.loss.kind = kind == ModelKind::DkSH
                         ? LossKind::Huber
                         : (rc.loss == "huber" ? LossKind::Huber : LossKind::Mse);
      SelectionResult sel = select_basis_count(
          rc.k_candidates, [&](std::size_t k) { return f.take_cols(k); }, data.values, sp, tc);
      std::fprintf(stderr, "%s: selected K=%zu, best val risk %.6g\n", model_name(kind), sel.k,
                   sel.predictor.best_val_risk);
      out.basis = with_basis_count(basis, sel.k);
      out.nn = std::move(sel.predictor.model);
      return out;
    }
    case ModelKind::OlsW: {
      out.ols = fit_ols(build_wendland_multi(default_wendland_scales()), data.locations,
                        data.values);
      return out;
    }
    case ModelKind::OlsS: {
      BasisSystem basis = build_family("spherical_mrts", rc.knots, max_k);
      const Matrix f = eval_features(basis, data.locations);
      double best_risk = std::numeric_limits<double>::infinity();
      std::size_t best_k = rc.k_candidates.front();
      for (std::size_t k : rc.k_candidates) {
        const Matrix fk = f.take_cols(k);
        const Vector beta =
            fit_ols_coefficients(fk.take_rows(sp.train), take(data.values, sp.train));
        const Vector pred = predict_ols_features(fk.take_rows(sp.val), beta);
        const Vector zv = take(data.values, sp.val);
        double risk = 0.0;
        for (std::size_t i = 0; i < zv.size(); ++i)
          risk += (zv[i] - pred[i]) * (zv[i] - pred[i]);
        if (risk < best_risk) {
          best_risk = risk;
          best_k = k;
        }
      }
      std::fprintf(stderr, "OLS_S: selected K=%zu\n", best_k);
      out.ols = fit_ols(with_basis_count(basis, best_k), data.locations, data.values);
      return out;
    }
    case ModelKind::Uk: {
      BasisSystem basis = build_family("spherical_mrts", rc.knots, max_k);
      const Matrix f = eval_features(basis, data.locations);
      double best_risk = std::numeric_limits<double>::infinity();
      std::size_t best_k = rc.k_candidates.front();
      for (std::size_t k : rc.k_candidates) {
        const Matrix fk = f.take_cols(k);
        const Vector beta =
            fit_ols_coefficients(fk.take_rows(sp.train), take(data.values, sp.train));
        const Vector pred = predict_ols_features(fk.take_rows(sp.val), beta);
        const Vector zv = take(data.values, sp.val);
        double risk = 0.0;
        for (std::size_t i = 0; i < zv.size(); ++i)
          risk += (zv[i] - pred[i]) * (zv[i] - pred[i]);
        if (risk < best_risk) {
          best_risk = risk;
          best_k = k;
        }
      }
      const std::size_t cap = data.size() > 5000 ? 64 : 0;
      std::fprintf(stderr, "UK: trend K=%zu, neighbor cap %zu\n", best_k, cap);
      out.uk = fit_uk(data.locations, data.values, with_basis_count(basis, best_k), cap);
      return out;
    }
  }
  throw std::logic_error("fit_single: unknown model");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sphkrig: spherical DeepKriging, baselines and simulation harness"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOpts sim_opts, basis_opts, fit_opts, pred_opts, eval_opts, repro_opts;
  std::string out_path, data_path, points_path, grid_spec, model_path, pred_path, model_name_arg;
  bool verbose = false;

  auto* sim = app.add_subcommand("simulate", "generate a scenario field as CSV");
  attach_config_flags(sim, sim_opts);
  sim->add_option("--out", out_path, "output CSV")->required();

  auto* basis_cmd = app.add_subcommand("basis", "dump a basis feature matrix as CSV");
  attach_config_flags(basis_cmd, basis_opts);
  basis_cmd->add_option("--out", out_path, "output CSV")->required();
  basis_cmd->add_option("--points", points_path, "evaluation points CSV (lon,lat)");
  basis_cmd->add_option("--grid", grid_spec, "evaluation grid LONxLAT");

  auto* fit = app.add_subcommand("fit", "fit one model to a points CSV");
  attach_config_flags(fit, fit_opts);
  fit->add_option("--data", data_path, "points CSV (lon,lat,value)")->required();
  fit->add_option("--model", model_name_arg, "model: OLS_W OLS_S DK_W DK_MRTS DK_S DK_S_H UK")
      ->default_val("DK_S");
  fit->add_option("--out", out_path, "checkpoint path")->required();

  auto* pred = app.add_subcommand("predict", "predict from a checkpoint");
  attach_config_flags(pred, pred_opts);
  pred->add_option("--model", model_path, "checkpoint path")->required();
  pred->add_option("--points", points_path, "prediction points CSV (lon,lat)");
  pred->add_option("--grid", grid_spec, "prediction grid LONxLAT");
  pred->add_option("--out", out_path, "output CSV")->required();

  auto* eval = app.add_subcommand("evaluate", "RMSE/MAE of predictions against observations");
  attach_config_flags(eval, eval_opts);
  eval->add_option("--data", data_path, "points CSV (lon,lat,value)")->required();
  eval->add_option("--pred", pred_path, "predictions CSV (lon,lat,pred)")->required();
  eval->add_option("--out", out_path, "optional metrics CSV");

  auto* repro = app.add_subcommand("reproduce", "run a replication study");
  attach_config_flags(repro, repro_opts);
  repro->add_option("--out", out_path, "output prefix")->required();
  repro->add_flag("--verbose", verbose, "progress lines to stderr");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const RunConfig rc = resolve_config(sim_opts);
      ScenarioConfig sc = scenario_from_config(rc);
      Rng rng(sc.seed);
      SimulatedField field = generate(sc, rng);
      const SplitIndices sp = split(sc.n, {0.8, 0.1, 0.1}, rng);
      contaminate(field, sc.noise, sp, rng);
      write_field_csv(out_path, field, sp);
      write_manifest(out_path, rc, "simulate", argc, argv);
      std::printf("wrote %s (%zu points)\n", out_path.c_str(), sc.n);
    } else if (basis_cmd->parsed()) {
      const RunConfig rc = resolve_config(basis_opts);
      const BasisSystem sys = build_family(rc.basis_family, rc.knots, rc.k_active);
      std::vector<SphereLocation> locs;
      if (!points_path.empty()) {
        locs = read_coords_csv(points_path);
      } else {
        auto [nlon, nlat] = parse_grid(grid_spec.empty() ? "72x36" : grid_spec);
        locs = make_lonlat_grid(nlon, nlat);
      }
      const Matrix f = eval_features(sys, locs);
      std::string text = "lon,lat";
      for (std::size_t k = 1; k <= f.cols(); ++k) text += ",phi_" + std::to_string(k);
      text += "\n";
      char buf[40];
      for (std::size_t i = 0; i < f.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", rad2deg(locs[i].lon));
        text += buf;
        std::snprintf(buf, sizeof(buf), ",%.17g", rad2deg(locs[i].lat));
        text += buf;
        for (std::size_t j = 0; j < f.cols(); ++j) {
          std::snprintf(buf, sizeof(buf), ",%.17g", f(i, j));
          text += buf;
        }
        text += "\n";
      }
      write_text_atomic(out_path, text);
      write_manifest(out_path, rc, "basis", argc, argv);
      std::printf("wrote %s (%zu x %zu)\n", out_path.c_str(), f.rows(), f.cols());
    } else if (fit->parsed()) {
      const RunConfig rc = resolve_config(fit_opts);
      const Dataset data = read_points_csv(data_path);
      const FittedModel model = fit_single(model_from_name(model_name_arg), data, rc);
      save_model(out_path, model);
      write_manifest(out_path, rc, "fit", argc, argv);
      std::printf("wrote %s\n", out_path.c_str());
    } else if (pred->parsed()) {
      const RunConfig rc = resolve_config(pred_opts);
      const FittedModel model = load_model(model_path);
      std::vector<SphereLocation> locs;
      if (!points_path.empty()) {
        locs = read_coords_csv(points_path);
      } else {
        auto [nlon, nlat] = parse_grid(grid_spec.empty() ? "360x180" : grid_spec);
        locs = make_lonlat_grid(nlon, nlat);
      }
      write_grid_csv(out_path, locs, model.predict_at(locs));
      write_manifest(out_path, rc, "predict", argc, argv);
      std::printf("wrote %s (%zu rows)\n", out_path.c_str(), locs.size());
    } else if (eval->parsed()) {
      const RunConfig rc = resolve_config(eval_opts);
      const Dataset data = read_points_csv(data_path);
      const Dataset predd = read_points_csv(pred_path, nullptr, "pred");
      if (data.size() != predd.size())
        throw DataError("evaluate: row counts differ between data and predictions");
      const double r = rmse(data.values, predd.values);
      const double m = mae(data.values, predd.values);
      std::printf("rmse,%.17g\nmae,%.17g\n", r, m);
      if (!out_path.empty()) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "metric,value\nrmse,%.17g\nmae,%.17g\n", r, m);
        write_text_atomic(out_path, buf);
        write_manifest(out_path, rc, "evaluate", argc, argv);
      }
    } else if (repro->parsed()) {
      const RunConfig rc = resolve_config(repro_opts);
      ExperimentConfig ec = experiment_from_config(rc);
      ec.verbose = verbose;
      const MetricsReport report = run_experiment(ec);
      write_text_atomic(out_path + ".csv", report.to_csv());
      write_text_atomic(out_path + ".txt", report.to_table());
      write_manifest(out_path, rc, "reproduce", argc, argv);
      std::fputs(report.to_table().c_str(), stdout);
    }
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
