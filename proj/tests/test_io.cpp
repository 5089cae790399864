#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sphkrig/checkpoint.hpp"
#include "sphkrig/config.hpp"
#include "sphkrig/csv.hpp"
#include "sphkrig/errors.hpp"

using namespace sphkrig;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / "sphkrig_test_io";
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("points CSV: read, reject, round trip") {
  TempDir tmp;
  {
    const std::string p = tmp.file("ok.csv");
    write_text_atomic(p, "lon,lat,value\n10,20,1.5\n-30,45,2\n0,0,3\n");
    const Dataset d = read_points_csv(p);
    REQUIRE(d.size() == 3);
    CHECK(d.locations[0].lon == doctest::Approx(deg2rad(10.0)));
    CHECK(d.locations[1].lat == doctest::Approx(deg2rad(45.0)));
    CHECK(d.values[2] == 3.0);
  }
  {
    // A lat = 95 row lands in the rejection report; with 50 good rows it
    // exceeds the 1% budget and aborts.
    const std::string p = tmp.file("bad_lat.csv");
    std::string text = "lon,lat,value\n1,95,9\n";
    for (int i = 0; i < 50; ++i) text += "1,2,3\n";
    write_text_atomic(p, text);
    CsvReadReport rep;
    CHECK_THROWS_AS(read_points_csv(p, &rep), DataError);
    // Rebuild with enough good rows that the bad one is tolerated.
    text = "lon,lat,value\n1,95,9\n";
    for (int i = 0; i < 200; ++i) text += "1,2,3\n";
    write_text_atomic(p, text);
    CsvReadReport rep2;
    const Dataset d = read_points_csv(p, &rep2);
    CHECK(d.size() == 200);
    REQUIRE(rep2.rejected.size() == 1);
    CHECK(rep2.rejected[0].first == 2);
    CHECK(rep2.rejected[0].second == "|lat| > 90");
  }
  {
    const std::string p = tmp.file("extra_col.csv");
    write_text_atomic(p, "lon,lat,value,elevation\n0,0,1,99\n1,1,2,98\n");
    CsvReadReport rep;
    const Dataset d = read_points_csv(p, &rep);
    CHECK(d.size() == 2);
    REQUIRE(rep.warnings.size() == 1);
    CHECK(rep.warnings[0].find("elevation") != std::string::npos);
  }
  {
    const std::string p = tmp.file("missing.csv");
    write_text_atomic(p, "lon,lat\n0,0\n");
    CHECK_THROWS_AS(read_points_csv(p), DataError);
    write_text_atomic(p, "lon,lat,value\n");
    CHECK_THROWS_AS(read_points_csv(p), DataError);
  }
  {
    // 17-significant-digit round trip is exact.
    const std::string p = tmp.file("roundtrip.csv");
    std::vector<SphereLocation> locs = {from_lonlat(0.1234567890123456, -0.9876543210987654),
                                        from_lonlat(2.718281828459045, 0.5772156649015329)};
    Vector values = {1.0 / 3.0, 2.0 / 7.0};
    write_points_csv(p, locs, values);
    const Dataset d = read_points_csv(p);
    REQUIRE(d.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::fabs(d.locations[i].lon - locs[i].lon) < 1e-12);
      CHECK(std::fabs(d.locations[i].lat - locs[i].lat) < 1e-12);
      CHECK(d.values[i] == values[i]);
    }
  }
}

TEST_CASE("grid construction and CSV layout") {
  const auto grid = make_lonlat_grid(4, 3);
  REQUIRE(grid.size() == 12);
  // lat-major: first row of four shares the south-pole latitude.
  for (int j = 0; j < 4; ++j) CHECK(grid[j].lat == doctest::Approx(-M_PI_2));
  CHECK(grid[11].lat == doctest::Approx(M_PI_2));
  // lon covers [-180, 180) half-open: no +180 point.
  for (const auto& g : grid) CHECK(g.lon < M_PI);
  CHECK(grid[0].lon == doctest::Approx(-M_PI));
  CHECK(grid[1].lon == doctest::Approx(-M_PI_2));

  TempDir tmp;
  const std::string p = tmp.file("grid.csv");
  write_grid_csv(p, grid, Vector(12, 7.0));
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line == "lon,lat,pred");
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 12);
}

TEST_CASE("config: defaults, file, flag layering, diagnostics") {
  RunConfig cfg;
  CHECK(cfg.n == 2500);
  CHECK(cfg.learning_rate == 1e-3);
  CHECK(cfg.k_candidates == std::vector<std::size_t>{25, 50, 100, 200, 400});

  TempDir tmp;
  const std::string p = tmp.file("run.cfg");
  write_text_atomic(p, "# comment\nn = 500\nlearning_rate = 0.01\nk_candidates = 5,10\n");
  apply_config_file(cfg, p);
  CHECK(cfg.n == 500);
  CHECK(cfg.learning_rate == 0.01);
  CHECK(cfg.k_candidates == std::vector<std::size_t>{5, 10});

  // Flag wins over file.
  apply_config_value(cfg, "n", "750");
  CHECK(cfg.n == 750);

  // Unknown key names the nearest valid one.
  try {
    apply_config_value(cfg, "learning_rte", "0.1");
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }

  // Type mismatch carries the file line number.
  write_text_atomic(p, "n = 500\nepochs_max = soon\n");
  RunConfig cfg2;
  try {
    apply_config_file(cfg2, p);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }

  // Scenario/noise values are validated at parse time.
  CHECK_THROWS_AS(apply_config_value(cfg, "scenario", "iv"), std::invalid_argument);

  const std::string manifest = manifest_json(cfg, "simulate", {"sphkrig", "simulate"});
  CHECK(manifest.find("\"n\": \"750\"") != std::string::npos);
  CHECK(manifest.find("\"command\": \"simulate\"") != std::string::npos);
}

TEST_CASE("checkpoint round trip preserves every tensor bit") {
  Checkpoint c;
  c.meta["model"] = "DK_S";
  Matrix t(3, 2);
  t(0, 0) = 1.0 / 3.0;
  t(0, 1) = -2.718281828459045;
  t(1, 0) = 1e-300;
  t(1, 1) = 12345.678901234567;
  t(2, 0) = 0.0;
  t(2, 1) = -0.1;
  c.tensors["coeffs"] = t;

  const Checkpoint back = checkpoint_from_text(checkpoint_to_text(c));
  CHECK(back.meta.at("model") == "DK_S");
  const Matrix& bt = back.tensors.at("coeffs");
  for (std::size_t i = 0; i < t.data().size(); ++i) CHECK(bt.data()[i] == t.data()[i]);

  CHECK_THROWS_AS(checkpoint_from_text("wrong-magic 1\nend\n"), DataError);
  CHECK_THROWS_AS(checkpoint_from_text("sphkrig-checkpoint 99\nend\n"), DataError);
}

TEST_CASE("fitted model save/load round trip predicts identically") {
  TempDir tmp;
  Rng rng(5);
  std::vector<SphereLocation> locs;
  for (int i = 0; i < 60; ++i)
    locs.push_back(from_lonlat(rng.uniform(-M_PI, M_PI), std::asin(rng.uniform(-1.0, 1.0))));
  Vector z(60);
  for (std::size_t i = 0; i < 60; ++i) z[i] = 1.0 + std::sin(locs[i].lat) + 0.01 * rng.normal();

  FittedModel model;
  model.kind = ModelKind::OlsS;
  model.ols = fit_ols(build_spherical_mrts(fibonacci_knots(20), 10), locs, z);

  const std::string p = tmp.file("model.ckpt");
  save_model(p, model);
  const FittedModel back = load_model(p);
  CHECK(back.kind == ModelKind::OlsS);

  const Vector before = model.predict_at(locs);
  const Vector after = back.predict_at(locs);
  for (std::size_t i = 0; i < 60; ++i) CHECK(before[i] == after[i]);
}
