#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "sphkrig/baselines.hpp"
#include "sphkrig/harness.hpp"

using namespace sphkrig;

TEST_CASE("split: sizes, disjointness, determinism") {
  {
    Rng rng(1);
    const SplitIndices s = split(2500, {0.8, 0.1, 0.1}, rng);
    CHECK(s.train.size() == 2000);
    CHECK(s.val.size() == 250);
    CHECK(s.test.size() == 250);
  }
  {
    Rng rng(2);
    const SplitIndices s = split(10, {0.8, 0.1, 0.1}, rng);
    CHECK(s.train.size() == 8);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 1);
  }
  {
    Rng a(3), b(3);
    const SplitIndices s1 = split(101, {0.8, 0.1, 0.1}, a);
    const SplitIndices s2 = split(101, {0.8, 0.1, 0.1}, b);
    CHECK(s1.train == s2.train);
    CHECK(s1.val == s2.val);
    CHECK(s1.test == s2.test);
  }
  {
    Rng rng(4);
    const SplitIndices s = split(137, {0.8, 0.1, 0.1}, rng);
    std::set<std::size_t> seen;
    for (std::size_t i : s.train) seen.insert(i);
    for (std::size_t i : s.val) seen.insert(i);
    for (std::size_t i : s.test) seen.insert(i);
    CHECK(seen.size() == 137);  // disjoint and covering
    CHECK(*seen.rbegin() == 136);
  }
  Rng rng(5);
  CHECK_THROWS_AS(split(100, {0.5, 0.1, 0.1}, rng), std::invalid_argument);
  CHECK_THROWS_AS(split(5, {0.8, 0.1, 0.1}, rng), std::invalid_argument);
}

TEST_CASE("rmse and mae") {
  CHECK(rmse({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  CHECK(mae({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  // Hand computation: errors 3 and 4.
  CHECK(rmse({0.0, 0.0}, {3.0, 4.0}) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(mae({0.0, 0.0}, {3.0, 4.0}) == 3.5);
  CHECK(rmse({5.0}, {3.0}) == 2.0);
  CHECK(mae({5.0}, {3.0}) == 2.0);
  CHECK_THROWS_AS(rmse({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(mae({1.0}, {1.0, 2.0}), std::invalid_argument);

  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    Vector a(20), b(20);
    for (std::size_t i = 0; i < 20; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    CHECK(rmse(a, b) >= mae(a, b));  // power-mean inequality
  }
}

TEST_CASE("experiment smoke: one OLS_S replication on a clean field") {
  ExperimentConfig cfg;
  cfg.scenario.n = 300;
  cfg.reps = 1;
  cfg.models = {ModelKind::OlsS};
  cfg.mrts_knots = 40;
  cfg.k_candidates = {10, 20};
  const MetricsReport report = run_experiment(cfg);
  REQUIRE(report.cells.size() == 1);
  const CellResult& c = report.cell(0, ModelKind::OlsS);
  CHECK(!c.failed);
  CHECK(std::isfinite(c.rmse));
  CHECK(std::isfinite(c.mae));
  CHECK(c.rmse >= c.mae);
}

TEST_CASE("report aggregation matches a recomputation from the rows") {
  ExperimentConfig cfg;
  cfg.scenario.n = 300;
  cfg.reps = 3;
  cfg.models = {ModelKind::OlsS, ModelKind::Uk};
  cfg.mrts_knots = 36;
  cfg.k_candidates = {8, 18};
  MetricsReport report = run_experiment(cfg);

  for (std::size_t j = 0; j < report.models.size(); ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < 3; ++r) mean += report.cells[r][j].rmse;
    mean /= 3.0;
    double sd = 0.0;
    for (std::size_t r = 0; r < 3; ++r)
      sd += (report.cells[r][j].rmse - mean) * (report.cells[r][j].rmse - mean);
    sd = std::sqrt(sd / 2.0);
    CHECK(report.aggregates[j].mean_rmse == doctest::Approx(mean).epsilon(1e-12));
    CHECK(report.aggregates[j].sd_rmse == doctest::Approx(sd).epsilon(1e-12));
  }

  const std::string csv = report.to_csv();
  CHECK(csv.find("model,rep,rmse,mae,failed") == 0);
  const std::string table = report.to_table();
  CHECK(table.find("OLS_S") != std::string::npos);
  CHECK(table.find("UK") != std::string::npos);
}

TEST_CASE("experiments are reproducible and failures stay contained") {
  ExperimentConfig cfg;
  cfg.scenario.n = 300;
  cfg.reps = 2;
  cfg.models = {ModelKind::OlsS};
  cfg.mrts_knots = 30;
  cfg.k_candidates = {6, 12};
  cfg.master_seed = 99;
  const MetricsReport a = run_experiment(cfg);
  const MetricsReport b = run_experiment(cfg);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(a.cells[r][0].rmse == b.cells[r][0].rmse);
    CHECK(a.cells[r][0].mae == b.cells[r][0].mae);
  }

  // An impossible candidate set fails fast, before any replication runs.
  ExperimentConfig bad = cfg;
  bad.k_candidates = {600};
  CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
}

TEST_CASE("test indices never reach the fitted models") {
  // The harness fits on train(+val) rows only; a direct check: corrupting
  // the test observations must leave the fitted predictions unchanged.
  ScenarioConfig sc;
  sc.n = 240;
  Rng rng(123);
  SimulatedField field = generate(sc, rng);
  const SplitIndices sp = split(sc.n, {0.8, 0.1, 0.1}, rng);

  const BasisSystem basis = build_spherical_mrts(fibonacci_knots(24), 12);
  const Matrix f = eval_features(basis, field.locations);

  const Vector beta1 = fit_ols_coefficients(f.take_rows(sp.train), take(field.z_obs, sp.train));
  Vector corrupted = field.z_obs;
  for (std::size_t i : sp.test) corrupted[i] += 1000.0;
  const Vector beta2 = fit_ols_coefficients(f.take_rows(sp.train), take(corrupted, sp.train));
  for (std::size_t j = 0; j < beta1.size(); ++j) CHECK(beta1[j] == beta2[j]);
}
