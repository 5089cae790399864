#include "sphkrig/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sphkrig/errors.hpp"
#include "sphkrig/version.hpp"

namespace sphkrig {

namespace {

struct KeyDef {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> apply;
  std::function<std::string(const RunConfig&)> format;
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size() || s.empty())
    throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& s) {
  const double v = to_double(s);
  if (v < 0 || v != std::floor(v)) throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

const std::vector<KeyDef>& registry() {
  auto size_key = [](std::size_t RunConfig::*member) {
    return std::pair{
        std::function<void(RunConfig&, const std::string&)>(
            [member](RunConfig& c, const std::string& v) { c.*member = to_size(v); }),
        std::function<std::string(const RunConfig&)>(
            [member](const RunConfig& c) { return std::to_string(c.*member); })};
  };
  auto double_key = [](double RunConfig::*member) {
    return std::pair{
        std::function<void(RunConfig&, const std::string&)>(
            [member](RunConfig& c, const std::string& v) { c.*member = to_double(v); }),
        std::function<std::string(const RunConfig&)>([member](const RunConfig& c) {
          char buf[40];
          std::snprintf(buf, sizeof(buf), "%.17g", c.*member);
          return std::string(buf);
        })};
  };
  auto string_key = [](std::string RunConfig::*member,
                       std::vector<std::string> allowed = {}) {
    return std::pair{
        std::function<void(RunConfig&, const std::string&)>(
            [member, allowed](RunConfig& c, const std::string& v) {
              if (!allowed.empty() &&
                  std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
                std::string opts;
                for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
                throw std::invalid_argument("'" + v + "' is not one of: " + opts);
              }
              c.*member = v;
            }),
        std::function<std::string(const RunConfig&)>(
            [member](const RunConfig& c) { return c.*member; })};
  };
  auto list_key = [](std::vector<std::size_t> RunConfig::*member) {
    return std::pair{
        std::function<void(RunConfig&, const std::string&)>(
            [member](RunConfig& c, const std::string& v) { c.*member = parse_size_list(v); }),
        std::function<std::string(const RunConfig&)>(
            [member](const RunConfig& c) { return join_sizes(c.*member); })};
  };

  static const std::vector<KeyDef> defs = [&] {
    std::vector<KeyDef> d;
    auto add = [&d](const char* name, auto pair) { d.push_back({name, pair.first, pair.second}); };
    add("scenario", string_key(&RunConfig::scenario, {"i", "ii", "iii"}));
    add("noise", string_key(&RunConfig::noise, {"clean", "gaussian", "outliers"}));
    add("n", size_key(&RunConfig::n));
    add("reps", size_key(&RunConfig::reps));
    d.push_back({"seed",
                 [](RunConfig& c, const std::string& v) {
                   errno = 0;
                   char* end = nullptr;
                   c.seed = std::strtoull(v.c_str(), &end, 10);
                   if (errno != 0 || end != v.c_str() + v.size() || v.empty())
                     throw std::invalid_argument("expected an unsigned integer, got '" + v + "'");
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    add("basis_family",
        string_key(&RunConfig::basis_family, {"spherical_mrts", "euclidean_mrts", "wendland"}));
    add("knots", size_key(&RunConfig::knots));
    add("k_active", size_key(&RunConfig::k_active));
    add("k_candidates", list_key(&RunConfig::k_candidates));
    add("models", string_key(&RunConfig::models));
    add("loss", string_key(&RunConfig::loss, {"mse", "huber"}));
    add("huber_delta", double_key(&RunConfig::huber_delta));
    add("epochs_max", size_key(&RunConfig::epochs_max));
    add("batch_size", size_key(&RunConfig::batch_size));
    add("patience", size_key(&RunConfig::patience));
    add("learning_rate", double_key(&RunConfig::learning_rate));
    add("dropout_rate", double_key(&RunConfig::dropout_rate));
    add("bn_momentum", double_key(&RunConfig::bn_momentum));
    add("adam_beta1", double_key(&RunConfig::adam_beta1));
    add("adam_beta2", double_key(&RunConfig::adam_beta2));
    add("adam_eps", double_key(&RunConfig::adam_eps));
    add("hidden_widths", list_key(&RunConfig::hidden_widths));
    d.push_back({"jobs",
                 [](RunConfig& c, const std::string& v) { c.jobs = static_cast<int>(to_size(v)); },
                 [](const RunConfig& c) { return std::to_string(c.jobs); }});
    d.push_back({"threads",
                 [](RunConfig& c, const std::string& v) {
                   c.threads = static_cast<int>(to_size(v));
                 },
                 [](const RunConfig& c) { return std::to_string(c.threads); }});
    return d;
  }();
  return defs;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (cur.empty()) continue;
    out.push_back(to_size(cur));
  }
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list, got '" + text + "'");
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& def : registry()) keys.push_back(def.name);
  return keys;
}

void apply_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& def : registry()) {
    if (key == def.name) {
      def.apply(config, value);
      return;
    }
  }
  std::string nearest;
  std::size_t best = SIZE_MAX;
  for (const auto& def : registry()) {
    const std::size_t d = edit_distance(key, def.name);
    if (d < best) {
      best = d;
      nearest = def.name;
    }
  }
  throw std::invalid_argument("unknown key '" + key + "' (did you mean '" + nearest + "'?)");
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_value(config, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string format_config_value(const RunConfig& config, const std::string& key) {
  for (const auto& def : registry())
    if (key == def.name) return def.format(config);
  throw std::invalid_argument("unknown key '" + key + "'");
}

std::string manifest_json(const RunConfig& config, const std::string& command,
                          const std::vector<std::string>& argv) {
  nlohmann::json j;
  j["tool"] = "sphkrig";
  j["version"] = kVersion;
  j["command"] = command;
  j["argv"] = argv;
  nlohmann::json resolved;
  for (const auto& key : config_keys()) resolved[key] = format_config_value(config, key);
  j["config"] = resolved;
  return j.dump(2) + "\n";
}

ScenarioConfig scenario_from_config(const RunConfig& config) {
  ScenarioConfig sc;
  sc.scenario = config.scenario == "i"    ? Scenario::StationaryGP
                : config.scenario == "ii" ? Scenario::LocalExtremes
                                          : Scenario::NonstationaryWH;
  sc.noise.kind = config.noise == "clean"      ? NoiseKind::Clean
                  : config.noise == "gaussian" ? NoiseKind::Gaussian
                                               : NoiseKind::Outliers;
  sc.n = config.n;
  sc.seed = config.seed;
  sc.validate();
  return sc;
}

TrainConfig train_from_config(const RunConfig& config) {
  TrainConfig t;
  t.loss.kind = config.loss == "huber" ? LossKind::Huber : LossKind::Mse;
  t.loss.huber_delta = config.huber_delta;
  t.epochs_max = config.epochs_max;
  t.batch_size = config.batch_size;
  t.patience = config.patience;
  t.learning_rate = config.learning_rate;
  t.dropout_rate = config.dropout_rate;
  t.bn_momentum = config.bn_momentum;
  t.adam_beta1 = config.adam_beta1;
  t.adam_beta2 = config.adam_beta2;
  t.adam_eps = config.adam_eps;
  t.hidden_widths = config.hidden_widths;
  t.seed = config.seed;
  t.validate();
  return t;
}

ExperimentConfig experiment_from_config(const RunConfig& config) {
  ExperimentConfig e;
  e.scenario = scenario_from_config(config);
  e.nn = train_from_config(config);
  e.reps = config.reps;
  e.master_seed = config.seed;
  e.mrts_knots = config.knots;
  e.k_candidates = config.k_candidates;
  e.jobs = config.jobs;
  e.models.clear();
  std::istringstream in(config.models);
  std::string name;
  while (std::getline(in, name, ',')) {
    name = trim(name);
    if (!name.empty()) e.models.push_back(model_from_name(name));
  }
  if (e.models.empty()) throw std::invalid_argument("models: empty list");
  return e;
}

}  // namespace sphkrig
