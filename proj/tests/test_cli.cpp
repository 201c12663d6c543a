#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gridtrack/cli.hpp"
#include "gridtrack/config.hpp"
#include "gridtrack/error.hpp"
#include "gridtrack/track_ingest.hpp"
#include "support/fixtures.hpp"

using namespace gridtrack;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "gridtrack");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gridtrack_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_csv_fixture(const fs::path& dir, const std::vector<StormTrack>& storms) {
  const auto path = dir / "tracks.csv";
  std::ofstream out(path);
  write_track_csv(out, storms);
  return path;
}

std::vector<StormTrack> three_storms() {
  return {testing::recurving_storm("AL012005", 14, 14.0, -45.0, 2005),
          testing::wobbling_storm("AL022006", 12, 16.0, -55.0, 2006),
          testing::straight_storm("AL032007", 10, 12.0, -60.0, 0.4, -0.5, 2007)};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config round trip") {
    RunConfig cfg;
    std::stringstream a;
    save_config(a, cfg);
    CHECK(load_config(a) == cfg);

    cfg.data = "some/path.txt";
    cfg.format = "csv";
    cfg.lr = 0.1 + 0.2;
    cfg.dropout = 1.0 / 3.0;
    cfg.clip_norm = 0.0;
    cfg.seed = 18446744073709551615ULL;
    cfg.split_seed = 12;
    cfg.bearing_sincos = true;
    cfg.horizon = 48;
    std::stringstream b;
    save_config(b, cfg);
    const auto back = load_config(b);
    CHECK(back == cfg);
    std::stringstream c;
    save_config(c, back);
    CHECK(c.str() == b.str());
  }

  TEST_CASE("config defaults") {
    const RunConfig cfg;
    CHECK(cfg.year_first == 1920);
    CHECK(cfg.year_last == 2012);
    CHECK(cfg.cell_size == 1.0);
    CHECK(cfg.epochs == 50);
    CHECK(cfg.patience == 5);
    CHECK(cfg.lr == 0.001);
    CHECK(cfg.dropout == 0.1);
    CHECK(cfg.hidden == 32);
    CHECK(cfg.clip_norm == 1.0);
    CHECK(cfg.warmup == 4);
    CHECK(cfg.horizon == 120);
    CHECK(cfg.training().features == default_features());
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("config errors") {
    std::istringstream unknown("hiden=3\n");
    CHECK_THROWS_AS((void)load_config(unknown), ConfigError);
    std::istringstream bad("epochs=many\n");
    CHECK_THROWS_AS((void)load_config(bad), ConfigError);
    std::istringstream noeq("epochs 3\n");
    CHECK_THROWS_AS((void)load_config(noeq), ConfigError);
    std::istringstream commented("# comment\n\nepochs = 7\n");
    CHECK(load_config(commented).epochs == 7);
    RunConfig cfg;
    cfg.horizon = 130;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.horizon = 120;
    cfg.layers = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"ingest", "--nope"}).code == 2);
    CHECK(run({"ingest"}).code == 2);
    CHECK(run({"train", "--data", "x", "--horizon", "7"}).code == 2);
    CHECK(run({"train", "--data", "x", "--format", "xml"}).code == 2);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("runtime errors exit 1") {
    const auto dir = scratch("errors");
    const auto empty = dir / "empty.txt";
    std::ofstream(empty).close();
    const auto r = run({"ingest", "--data", empty.string(), "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("no storms parsed") != std::string::npos);

    const auto bad = dir / "bad.txt";
    std::ofstream(bad) << "AL012012, ALBERTO, 2,\n20120519, 1800, , LO, 33.1N, 77.0W, 25, 1009,\n"
                          "20120520, 0000, , TS, 32.5X, 77.3W, 40, 1007,\n";
    const auto r2 = run({"ingest", "--data", bad.string(), "--out", dir.string()});
    CHECK(r2.code == 1);
    CHECK(r2.err.find("line 3") != std::string::npos);

    CHECK(run({"ingest", "--data", (dir / "missing.txt").string()}).code == 1);
    const auto r3 = run({"evaluate", "--data", bad.string(), "--out", (dir / "norun").string()});
    CHECK(r3.code == 1);
    CHECK(r3.err.find("checkpoint") != std::string::npos);
  }

  TEST_CASE("tiny fixture end to end") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = scratch("tiny");
    const auto data = write_csv_fixture(dir, three_storms()).string();
    const auto run_dir = (dir / "run").string();
    const std::vector<std::string> common{"--data", data, "--format", "csv", "--out", run_dir};
    const auto with = [&](std::vector<std::string> head) {
      head.insert(head.end(), common.begin(), common.end());
      return head;
    };

    const auto ing = run(with({"ingest"}));
    REQUIRE(ing.code == 0);
    CHECK(ing.out.find("storms kept: 3") != std::string::npos);
    CHECK(fs::exists(fs::path(run_dir) / "tracks.csv"));

    const auto aud = run(with({"audit"}));
    REQUIRE(aud.code == 0);
    CHECK(fs::exists(fs::path(run_dir) / "features.csv"));

    const auto cfg_path = dir / "tiny.cfg";
    std::ofstream(cfg_path) << "hidden=8\nepochs=3\nlr=0.05\n";
    const auto tr = run(with({"train", "--config", cfg_path.string(), "--hidden", "5", "--seed", "7"}));
    REQUIRE(tr.code == 0);
    for (const auto* f : {"checkpoint.txt", "grid.txt", "normalization.csv", "train_log.csv", "split.txt",
                          "run_config.txt"}) {
      CHECK(fs::exists(fs::path(run_dir) / f));
    }
    const auto saved = load_config_file((fs::path(run_dir) / "run_config.txt").string());
    CHECK(saved.hidden == 5);  // flag wins over file
    CHECK(saved.epochs == 3);
    CHECK(saved.seed == 7);

    const auto fc = run({"forecast", "--run", run_dir, "--storm", "AL012005", "--horizon", "24"});
    REQUIRE(fc.code == 0);
    const auto csv = slurp(fs::path(run_dir) / "forecast_AL012005.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(fs::exists(fs::path(run_dir) / "forecast_AL012005.geojson"));
    CHECK(fc.out.find("+24 h") != std::string::npos);

    const auto zero = run({"forecast", "--run", run_dir, "--storm", "syn al022006", "--horizon", "0"});
    CHECK(zero.code == 1);  // names with spaces are not ids; near matches listed
    CHECK(zero.err.find("AL022006") != std::string::npos);
    const auto h0 = run({"forecast", "--run", run_dir, "--storm", "SYNAL022006:2006", "--horizon", "0"});
    REQUIRE(h0.code == 0);
    CHECK(slurp(fs::path(run_dir) / "forecast_AL022006.csv") == "storm_id,step,hours_ahead,row,col,lat,lon,clamped\n");

    const auto ev = run({"evaluate", "--run", run_dir, "--split", "train"});
    REQUIRE(ev.code == 0);
    CHECK(fs::exists(fs::path(run_dir) / "eval_train_metrics.csv"));
    CHECK(fs::exists(fs::path(run_dir) / "eval_train_comparison.csv"));
    CHECK(run({"evaluate", "--run", run_dir, "--split", "holdout"}).code == 2);

    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 5.0);
  }

  TEST_CASE("evaluating the training storms reproduces the logged mse") {
    const auto dir = scratch("selfcheck");
    const auto data = write_csv_fixture(dir, testing::synthetic_season(14)).string();
    const auto run_dir = (dir / "run").string();
    REQUIRE(run({"train", "--data", data, "--format", "csv", "--out", run_dir, "--epochs", "4", "--hidden", "6",
                 "--lr", "0.05"})
                .code == 0);
    REQUIRE(run({"evaluate", "--run", run_dir, "--split", "train", "--horizon", "24"}).code == 0);

    std::istringstream log(slurp(fs::path(run_dir) / "train_log.csv"));
    std::string line;
    std::getline(log, line);
    double best_val = 1e300, best_train = 0.0;
    while (std::getline(log, line)) {
      const auto a = line.find(','), b = line.find(',', a + 1), c = line.find(',', b + 1);
      const double tr = std::stod(line.substr(a + 1, b - a - 1));
      const double va = std::stod(line.substr(b + 1, c - b - 1));
      if (va < best_val) {
        best_val = va;
        best_train = tr;
      }
    }
    const auto metrics = slurp(fs::path(run_dir) / "eval_train_metrics.csv");
    const auto at = metrics.find("# ALL,");
    REQUIRE(at != std::string::npos);
    const auto start = at + 6;
    const double mse = std::stod(metrics.substr(start, metrics.find(',', start) - start));
    CHECK(std::abs(mse - best_train) <= 1e-9);
  }

  TEST_CASE("same seed gives byte-identical checkpoints") {
    const auto dir = scratch("determinism");
    const auto data = write_csv_fixture(dir, testing::synthetic_season(12)).string();
    for (const auto* name : {"a", "b"}) {
      REQUIRE(run({"train", "--data", data, "--format", "csv", "--out", (dir / name).string(), "--epochs", "3",
                   "--hidden", "6", "--seed", "7"})
                  .code == 0);
    }
    CHECK(slurp(dir / "a" / "checkpoint.txt") == slurp(dir / "b" / "checkpoint.txt"));
    CHECK(slurp(dir / "a" / "normalization.csv") == slurp(dir / "b" / "normalization.csv"));
  }
}
