#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gridtrack/error.hpp"
#include "gridtrack/eval.hpp"
#include "support/fixtures.hpp"

using namespace gridtrack;
namespace fs = std::filesystem;

namespace {

ForecastModel constant_model(double out_row, double out_col, DisplacementScale scale) {
  ForecastModel m;
  m.net = init_network(static_cast<int>(m.features.size()), 3, 2);
  for_each_tensor(m.net.params, [](const std::string&, Matrix& t) { t.fill(0.0); });
  m.net.params.head_bias(0, 0) = std::atanh(out_row);
  m.net.params.head_bias(1, 0) = std::atanh(out_col);
  m.scale = scale;
  return m;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gridtrack_eval_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("eval_report") {
  TEST_CASE("scaled grid mae") {
    const GridSpec g(0.0, 50.0, 0.0, 50.0, 1.0, {});
    CHECK(scaled_grid_mae({{0, 0}}, {{1, 0}}, g) == doctest::Approx(0.5 / 49.0));
    CHECK(scaled_grid_mae({{0, 0}, {3, 3}}, {{0, 0}, {3, 3}}, g) == 0.0);
    CHECK(scaled_grid_mae({{0, 0}, {10, 0}}, {{0, 49}, {0, 0}}, g) ==
          doctest::Approx((0.5 * 1.0 + 0.5 * 10.0 / 49.0) / 2.0));
    CHECK_THROWS_AS((void)scaled_grid_mae({{0, 0}}, {}, g), ShapeError);
    CHECK_THROWS_AS((void)scaled_grid_mae({}, {}, g), ShapeError);
  }

  TEST_CASE("persistence repeats the last displacement") {
    const auto storm = testing::straight_storm("AL012005", 10, 10.5, -50.5, 1.0, 2.0);
    const auto g = build_grid({storm}, 1.0);
    const auto fc = persistence_forecast(g, storm, 3, 24);
    REQUIRE(fc.cells.size() == 4);
    CHECK(fc.origin_cell == CellIndex{3, 6});
    CHECK(fc.cells[0] == CellIndex{4, 8});
    CHECK(fc.cells[3] == CellIndex{7, 14});
    const auto errors = track_error_by_lead(fc, storm);
    REQUIRE(errors.size() == 4);
    for (const auto& [lead, km] : errors) CHECK(km == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS_AS((void)persistence_forecast(g, storm, 0, 24), ConfigError);
  }

  TEST_CASE("lead errors stop at the first gap in the truth") {
    auto storm = testing::straight_storm("AL012005", 10, 10.5, -50.5, 1.0, 0.0);
    const auto g = build_grid({storm}, 1.0);
    storm.points.erase(storm.points.begin() + 6);
    const auto fc = persistence_forecast(g, storm, 3, 36);
    const auto errors = track_error_by_lead(fc, storm);
    CHECK(errors.size() == 2);  // +6 h and +12 h; +18 h is missing
    CHECK(errors.count(6) == 1);
    CHECK(errors.count(18) == 0);
  }

  TEST_CASE("storm evaluation") {
    const auto storm = testing::straight_storm("AL012005", 14, 10.5, -50.5, 1.0, 0.0);
    const auto g = build_grid({storm}, 1.0);
    const auto model = constant_model(0.5, 0.0, {2.0, 1.0});  // exactly one row per step
    const auto ev = evaluate_storm(model, g, storm, 4, 48);
    CHECK(ev.model.storm_id == "AL012005");
    CHECK(ev.model.tf_elements == 26);
    CHECK(ev.model.tf_rmse == doctest::Approx(std::sqrt(ev.model.tf_mse)));
    // The model predicts the true motion: zero rollout error at every lead.
    for (const auto& [lead, km] : ev.model.lead_error_km) CHECK(km == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ev.model.scaled_mae == 0.0);
    // Origins 3..12 (10 forecasts); the +48 h lead is covered from origins 3..5.
    CHECK(ev.model.lead_counts.at(6) == 10);
    CHECK(ev.model.lead_counts.at(48) == 3);
    std::size_t prev = 1000;
    for (const auto& [lead, n] : ev.model.lead_counts) {
      CHECK(n <= prev);
      prev = n;
    }
    CHECK(ev.baseline.lead_counts == ev.model.lead_counts);
    CHECK(ev.showcase.cells.size() == 8);
    CHECK(ev.showcase.origin == 3);
  }

  TEST_CASE("pooling weights by counts") {
    MetricsRecord a, b;
    a.tf_mse = 1.0;
    a.tf_elements = 10;
    a.scaled_mae = 0.2;
    a.mae_steps = 1;
    a.lead_error_km[6] = 100.0;
    a.lead_counts[6] = 3;
    b.tf_mse = 4.0;
    b.tf_elements = 30;
    b.scaled_mae = 0.4;
    b.mae_steps = 3;
    b.lead_error_km[6] = 200.0;
    b.lead_counts[6] = 1;
    b.lead_error_km[12] = 50.0;
    b.lead_counts[12] = 1;
    const auto p = pool_metrics({a, b});
    CHECK(p.storm_id == "ALL");
    CHECK(p.tf_mse == doctest::Approx(3.25));
    CHECK(p.tf_rmse == doctest::Approx(std::sqrt(3.25)));
    CHECK(p.tf_elements == 40);
    CHECK(p.scaled_mae == doctest::Approx(0.35));
    CHECK(p.lead_error_km.at(6) == doctest::Approx(125.0));
    CHECK(p.lead_counts.at(6) == 4);
    CHECK(p.lead_error_km.at(12) == doctest::Approx(50.0));
  }

  TEST_CASE("published comparison constants") {
    const auto& t = published_mae();
    REQUIRE(t.size() == 3);
    CHECK(std::string(t[0].storm) == "DEAN");
    CHECK(t[0].grid_rnn == 0.0842);
    CHECK(t[1].sparse_rnn_lat == 0.2500);
    CHECK(t[2].sparse_rnn_avg == 0.56565);
    for (const auto& row : t) CHECK(row.sparse_rnn_avg == doctest::Approx((row.sparse_rnn_lat + row.sparse_rnn_lon) / 2));
  }

  TEST_CASE("report files") {
    const auto storm = testing::straight_storm("AL012005", 14, 10.5, -50.5, 1.0, 0.0);
    const auto g = build_grid({storm}, 1.0);
    const auto ev = evaluate_storm(constant_model(0.4, 0.0, {2.0, 1.0}), g, storm, 4, 48);
    const auto dir = scratch("report");
    const auto files = emit_report({pool_metrics({ev.model}), ev.model}, {pool_metrics({ev.baseline})},
                                   {{ev.showcase, storm}}, dir, "run1", {{48, "official", 120.5}});
    REQUIRE(fs::exists(files.metrics));
    REQUIRE(fs::exists(files.baseline_metrics));
    REQUIRE(fs::exists(files.comparison));
    REQUIRE(files.geojson.size() == 1);
    CHECK(files.geojson[0].filename() == "run1_AL012005.geojson");
    const auto metrics = slurp(files.metrics);
    CHECK(metrics.rfind("storm_id,lead_hours,error_km,n\nALL,6,", 0) == 0);
    CHECK(metrics.find("# summary") != std::string::npos);
    const auto cmp = slurp(files.comparison);
    CHECK(cmp.rfind("storm_id,source,metric,value\n", 0) == 0);
    CHECK(cmp.find("DEAN,grid_rnn_published,scaled_grid_mae,0.0842\n") != std::string::npos);
    CHECK(cmp.find("SANDY,sparse_rnn_published,avg_mae,0.42245\n") != std::string::npos);
    CHECK(cmp.find("ALL,this_model,track_error_km_48h,") != std::string::npos);
    CHECK(cmp.find("ALL,persistence,scaled_grid_mae,") != std::string::npos);
    CHECK(cmp.find("ALL,official,track_error_km_48h,120.5\n") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("external error csv") {
    const auto dir = scratch("external");
    fs::create_directories(dir);
    {
      std::ofstream(dir / "ok.csv") << "lead_hours,source,error_km\n48,official,101.5\n24,official,60\n";
      std::ofstream(dir / "bad.csv") << "lead,source,km\n48,official,101.5\n";
      std::ofstream(dir / "token.csv") << "lead_hours,source,error_km\nsoon,official,1\n";
    }
    const auto rows = load_external_errors((dir / "ok.csv").string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].lead_hours == 48);
    CHECK(rows[0].source == "official");
    CHECK(rows[1].error_km == 60.0);
    CHECK_THROWS_AS((void)load_external_errors((dir / "bad.csv").string()), SchemaError);
    CHECK_THROWS_AS((void)load_external_errors((dir / "token.csv").string()), FieldError);
    CHECK_THROWS_AS((void)load_external_errors((dir / "missing.csv").string()), IoError);
    fs::remove_all(dir);
  }
}
