#include "gridtrack/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "gridtrack/config.hpp"
#include "gridtrack/error.hpp"
#include "gridtrack/eval.hpp"
#include "gridtrack/features.hpp"
#include "gridtrack/forecast.hpp"
#include "gridtrack/grid.hpp"
#include "gridtrack/stats.hpp"
#include "gridtrack/track_ingest.hpp"
#include "text.hpp"

namespace fs = std::filesystem;

namespace gridtrack {

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct Flags {
  std::optional<std::string> data;
  std::optional<std::string> format;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<double> cell_size;
  std::optional<int> hidden;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<double> dropout;
  std::optional<int> horizon;
  std::optional<int> warmup;
  std::optional<std::string> out;
  // command specific
  std::optional<std::string> run;
  std::string storm;
  std::string split = "test";
  std::optional<std::string> external;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--data", f.data, "Best-track input file");
  cmd->add_option("--format", f.format, "Input format")->check(CLI::IsMember({"hurdat2", "csv"}));
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_option("--cell-size", f.cell_size, "Grid cell size in degrees");
  cmd->add_option("--hidden", f.hidden, "LSTM hidden width");
  cmd->add_option("--epochs", f.epochs, "Maximum training epochs");
  cmd->add_option("--lr", f.lr, "SGD learning rate");
  cmd->add_option("--dropout", f.dropout, "Dropout rate on LSTM inputs");
  cmd->add_option("--horizon", f.horizon, "Forecast horizon in hours");
  cmd->add_option("--warmup", f.warmup, "Observed fixes fed before forecasting");
  cmd->add_option("--out", f.out, "Output directory");
}

RunConfig apply_flags(RunConfig cfg, const Flags& f) {
  if (f.config) cfg = load_config_file(*f.config, std::move(cfg));
  if (f.data) cfg.data = *f.data;
  if (f.format) cfg.format = *f.format;
  if (f.seed) cfg.seed = *f.seed;
  if (f.cell_size) cfg.cell_size = *f.cell_size;
  if (f.hidden) cfg.hidden = *f.hidden;
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.lr) cfg.lr = *f.lr;
  if (f.dropout) cfg.dropout = *f.dropout;
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.warmup) cfg.warmup = *f.warmup;
  if (f.out) cfg.out = *f.out;
  return cfg;
}

RunConfig resolve(const Flags& f, bool needs_data) {
  RunConfig cfg;
  try {
    cfg = apply_flags(cfg, f);
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (needs_data && cfg.data.empty()) throw UsageError("no input data; pass --data or set data= in the config");
  return cfg;
}

// Forecast and evaluate start from the training run's saved config.
std::pair<RunConfig, fs::path> resolve_from_run(const Flags& f) {
  const RunConfig first = resolve(f, false);
  const fs::path run_dir = f.run ? fs::path(*f.run) : fs::path(first.out);
  const fs::path saved = run_dir / "run_config.txt";
  if (!fs::exists(saved)) return {first, run_dir};
  RunConfig cfg = load_config_file(saved.string());
  if (!f.out) cfg.out = run_dir.string();
  try {
    cfg = apply_flags(cfg, f);
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return {cfg, run_dir};
}

std::vector<StormTrack> read_tracks(const RunConfig& cfg) {
  return cfg.format == "csv" ? parse_track_csv_file(cfg.data) : parse_hurdat2_file(cfg.data);
}

FilterResult load_storms(const RunConfig& cfg, std::ostream& out, bool verbose) {
  const auto raw = read_tracks(cfg);
  if (raw.empty()) throw Error("no storms parsed from " + cfg.data);
  auto filtered = filter_valid(raw, cfg.year_window());
  if (verbose) {
    out << "storms parsed: " << raw.size() << '\n'
        << "storms kept: " << filtered.tracks.size() << " (" << cfg.year_first << "-" << cfg.year_last
        << "; outside window " << filtered.outside_window << ", too short " << filtered.dropped_storms
        << ", invalid points dropped " << filtered.dropped_points << ")\n";
  }
  if (filtered.tracks.empty()) throw Error("no storms left after filtering");
  return filtered;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void print_stats(const std::vector<StormTrack>& tracks, std::ostream& out) {
  const auto st = track_stats(tracks);
  const auto& shortest = tracks[st.min_distance_index];
  const auto& longest = tracks[st.max_distance_index];
  out << "valid points: " << st.total_points << '\n'
      << "median points per storm: " << st.median_points << '\n'
      << "shortest track: " << shortest.id << ' ' << shortest.name << " (" << fmt(st.distances_km[st.min_distance_index], 1)
      << " km)\n"
      << "longest track: " << longest.id << ' ' << longest.name << " (" << fmt(st.distances_km[st.max_distance_index], 1)
      << " km)\n"
      << "pearson r (points vs distance): " << fmt(st.points_distance_pearson) << '\n';
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Matches an id, a name, or NAME:YEAR (case-insensitive).
const StormTrack& find_storm(const std::vector<StormTrack>& storms, const std::string& query) {
  const auto q = upper(query);
  std::string name = q;
  std::optional<int> year;
  if (const auto colon = q.find(':'); colon != std::string::npos) {
    name = q.substr(0, colon);
    year = text::parse_number<int>(std::string_view(q).substr(colon + 1));
  }
  const StormTrack* hit = nullptr;
  for (const auto& s : storms) {
    if (upper(s.id) == q) return s;
    if (upper(s.name) == name && (!year || s.year() == *year)) {
      if (hit) throw Error("storm '" + query + "' is ambiguous; use an id such as " + hit->id + " or " + s.id);
      hit = &s;
    }
  }
  if (hit) return *hit;

  std::vector<std::pair<std::size_t, const StormTrack*>> ranked;
  for (const auto& s : storms) {
    ranked.emplace_back(std::min(levenshtein(q, upper(s.id)), levenshtein(name, upper(s.name))), &s);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string msg = "unknown storm '" + query + "'; near matches:";
  for (std::size_t k = 0; k < std::min<std::size_t>(5, ranked.size()); ++k) {
    msg += ' ' + ranked[k].second->id + " (" + ranked[k].second->name + ")";
  }
  throw Error(msg);
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Flags& f, std::ostream& out) {
  const auto cfg = resolve(f, true);
  const auto storms = load_storms(cfg, out, true);
  print_stats(storms.tracks, out);
  ensure_dir(cfg.out);
  const fs::path path = fs::path(cfg.out) / "tracks.csv";
  auto file = open_out(path);
  write_track_csv(file, storms.tracks);
  out << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_audit(const Flags& f, std::ostream& out) {
  const auto cfg = resolve(f, true);
  const auto storms = load_storms(cfg, out, true).tracks;
  print_stats(storms, out);

  const auto grid = build_grid(storms, cfg.cell_size);
  out << "grid: " << grid.rows() << " rows x " << grid.cols() << " cols at " << cfg.cell_size << " deg; "
      << grid.occupied_count() << " occupied cells\n";
  double sum = 0.0, worst = 0.0, bound = 0.0;
  std::size_t n = 0;
  for (const auto& s : storms) {
    for (const auto& p : s.points) {
      const GeoPoint g{p.lat, p.lon};
      const double e = haversine_distance(g, decode_cell(grid, encode_cell(grid, g)));
      sum += e;
      worst = std::max(worst, e);
      bound = std::max(bound, grid.half_diagonal_km(p.lat));
      ++n;
    }
  }
  out << "round-trip error km: mean " << fmt(sum / static_cast<double>(n), 2) << ", max " << fmt(worst, 2)
      << " (half-diagonal bound " << fmt(bound, 2) << ")\n";

  const auto st = track_stats(storms);
  std::vector<double> counts(st.point_counts.begin(), st.point_counts.end());
  for (const auto& [label, xs] : {std::pair{"points per storm", counts}, std::pair{"track length km", st.distances_km}}) {
    if (xs.size() < 8) continue;
    const auto ad = anderson_darling_normal(xs);
    out << "anderson-darling (" << label << "): A2* " << fmt(ad.statistic) << " vs " << ad.critical_5pct << " -> "
        << (ad.reject_at_5pct ? "not normal" : "normal") << " at 5%\n";
  }

  const auto features = parse_feature_list(cfg.features, cfg.bearing_sincos);
  std::vector<std::string> ids;
  std::vector<std::vector<FeatureTuple>> tuples;
  double worst_mean = 0.0, worst_sd = 0.0;
  for (const auto& s : storms) {
    ids.push_back(s.id);
    tuples.push_back(derive_features(s, grid));
    const auto norm = normalize(feature_matrix(tuples.back(), features), s.id);
    for (std::size_t c = 0; c < features.size(); ++c) {
      if (norm.stddev[c] == 0.0) continue;
      double m = 0.0, v = 0.0;
      for (std::size_t r = 0; r < norm.values.rows(); ++r) m += norm.values(r, c);
      m /= static_cast<double>(norm.values.rows());
      for (std::size_t r = 0; r < norm.values.rows(); ++r) v += (norm.values(r, c) - m) * (norm.values(r, c) - m);
      worst_mean = std::max(worst_mean, std::abs(m));
      worst_sd = std::max(worst_sd, std::abs(std::sqrt(v / static_cast<double>(norm.values.rows())) - 1.0));
    }
  }
  out << "normalized columns: max |mean| " << worst_mean << ", max |sd - 1| " << worst_sd << '\n';

  ensure_dir(cfg.out);
  {
    auto file = open_out(fs::path(cfg.out) / "features.csv");
    write_feature_csv(file, ids, tuples, features);
  }
  save_grid_file((fs::path(cfg.out) / "audit_grid.txt").string(), grid);
  out << "wrote " << (fs::path(cfg.out) / "features.csv").string() << '\n';
  return 0;
}

int cmd_train(const Flags& f, std::ostream& out) {
  const auto cfg = resolve(f, true);
  const auto started = std::chrono::steady_clock::now();
  const auto storms = load_storms(cfg, out, true).tracks;
  const auto plan = make_split(storms, cfg.effective_split_seed());
  const auto grid = build_grid(storms, select_storms(storms, plan.train_ids), cfg.cell_size);
  out << "split: " << plan.train_ids.size() << " train, " << plan.validation_ids.size() << " validation, "
      << plan.test_ids.size() << " test\n"
      << "grid: " << grid.rows() << "x" << grid.cols() << ", " << grid.occupied_count() << " occupied cells\n";

  const auto result = train(storms, grid, plan, cfg.training(), [&](const EpochLog& e) {
    out << "epoch " << e.epoch << ": train " << text::format_double(e.train_mse) << ", val "
        << text::format_double(e.val_mse) << " (" << fmt(e.seconds, 2) << " s)\n";
  });

  const fs::path dir(cfg.out);
  ensure_dir(dir);
  save_checkpoint_file((dir / "checkpoint.txt").string(), result.model);
  save_grid_file((dir / result.model.grid_ref).string(), grid);
  {
    auto file = open_out(dir / result.model.normalization_ref);
    write_normalization_csv(file, result.prepared, result.model.features);
  }
  {
    auto file = open_out(dir / "train_log.csv");
    file << "epoch,train_mse,val_mse,seconds\n";
    for (const auto& e : result.log) {
      file << e.epoch << ',' << text::format_double(e.train_mse) << ',' << text::format_double(e.val_mse) << ','
           << fmt(e.seconds, 3) << '\n';
    }
  }
  {
    auto file = open_out(dir / "split.txt");
    save_split(file, plan);
  }
  save_config_file((dir / "run_config.txt").string(), cfg);

  const auto& best = result.log[static_cast<std::size_t>(result.best_epoch - 1)];
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out << "best epoch " << result.best_epoch << " of " << result.log.size() << ": train MSE "
      << text::format_double(best.train_mse) << ", validation MSE " << text::format_double(best.val_mse) << '\n'
      << "wall time " << fmt(wall, 1) << " s\n"
      << "wrote " << (dir / "checkpoint.txt").string() << '\n';
  return 0;
}

struct LoadedRun {
  RunConfig cfg;
  fs::path dir;
  ForecastModel model;
  GridSpec grid;
  std::vector<StormTrack> storms;
};

LoadedRun load_run(const Flags& f, std::ostream& out) {
  auto [cfg, dir] = resolve_from_run(f);
  if (cfg.data.empty()) throw UsageError("no input data; pass --data or train a run first");
  const fs::path ckpt = dir / "checkpoint.txt";
  if (!fs::exists(ckpt)) throw IoError("checkpoint not found: " + ckpt.string());
  LoadedRun run{cfg, dir, load_checkpoint_file(ckpt.string()), {}, {}};
  run.grid = load_grid_file((dir / run.model.grid_ref).string());
  run.storms = load_storms(cfg, out, false).tracks;
  return run;
}

int cmd_forecast(const Flags& f, std::ostream& out) {
  if (f.storm.empty()) throw UsageError("forecast needs --storm");
  const auto run = load_run(f, out);
  const auto& storm = find_storm(run.storms, f.storm);
  const auto fc = rollout(run.model, run.grid, storm, static_cast<std::size_t>(run.cfg.warmup), run.cfg.horizon);

  const fs::path dir(run.cfg.out);
  ensure_dir(dir);
  const auto stem = "forecast_" + storm.id;
  {
    auto file = open_out(dir / (stem + ".csv"));
    write_forecast_csv(file, {fc});
  }
  {
    auto file = open_out(dir / (stem + ".geojson"));
    write_forecast_geojson(file, fc, storm);
  }
  out << storm.id << ' ' << storm.name << ": " << fc.cells.size() << " predicted cells from "
      << format_iso8601(fc.origin_time) << " (warmup " << run.cfg.warmup << ")\n";
  const auto errors = track_error_by_lead(fc, storm);
  for (const auto& [lead, km] : errors) out << "  +" << lead << " h: " << fmt(km, 1) << " km\n";
  if (errors.size() < fc.cells.size()) out << "  truth covers " << errors.size() * kStepHours << " h of the horizon\n";
  out << "wrote " << (dir / (stem + ".csv")).string() << " and " << (dir / (stem + ".geojson")).string() << '\n';
  return 0;
}

int cmd_evaluate(const Flags& f, std::ostream& out) {
  const auto run = load_run(f, out);
  SplitPlan plan;
  {
    std::ifstream in(run.dir / "split.txt");
    if (!in) throw IoError("split not found: " + (run.dir / "split.txt").string());
    plan = load_split(in);
  }
  const std::vector<std::string>* ids = nullptr;
  if (f.split == "test") ids = &plan.test_ids;
  else if (f.split == "train") ids = &plan.train_ids;
  else if (f.split == "validation") ids = &plan.validation_ids;
  else throw UsageError("--split must be test, train or validation");
  const auto storms = select_storms(run.storms, *ids);
  if (storms.empty()) throw Error("no storms in the " + f.split + " split");

  std::vector<double> counts;
  for (const auto& s : storms) counts.push_back(static_cast<double>(s.points.size()));
  const double long_cut = median(counts);

  std::vector<MetricsRecord> per_model, per_base, long_model, long_base;
  std::vector<Showcase> showcases;
  const auto warmup = static_cast<std::size_t>(run.cfg.warmup);
  for (const auto& s : storms) {
    auto ev = evaluate_storm(run.model, run.grid, s, warmup, run.cfg.horizon);
    if (static_cast<double>(s.points.size()) >= long_cut) {
      long_model.push_back(ev.model);
      long_base.push_back(ev.baseline);
      if (s.points.size() >= warmup + 1) showcases.push_back({std::move(ev.showcase), s});
    }
    per_model.push_back(std::move(ev.model));
    per_base.push_back(std::move(ev.baseline));
  }
  std::vector<MetricsRecord> metrics{pool_metrics(per_model, "ALL"), pool_metrics(long_model, "LONG")};
  std::vector<MetricsRecord> baseline{pool_metrics(per_base, "ALL"), pool_metrics(long_base, "LONG")};
  metrics.insert(metrics.end(), per_model.begin(), per_model.end());
  baseline.insert(baseline.end(), per_base.begin(), per_base.end());

  std::vector<ExternalError> external;
  if (f.external) external = load_external_errors(*f.external);
  const auto files = emit_report(metrics, baseline, showcases, run.cfg.out, "eval_" + f.split, external);

  const auto& all = metrics[0];
  const auto& base = baseline[0];
  out << "storms evaluated: " << storms.size() << " (" << f.split << " split; " << long_model.size()
      << " long-duration with >= " << long_cut << " fixes)\n"
      << "teacher-forced MSE " << text::format_double(all.tf_mse) << ", RMSE " << text::format_double(all.tf_rmse)
      << " (persistence MSE " << text::format_double(base.tf_mse) << ")\n"
      << "scaled grid MAE: all " << fmt(all.scaled_mae) << ", long-duration " << fmt(metrics[1].scaled_mae)
      << " (persistence " << fmt(base.scaled_mae) << ")\n"
      << "lead   model_km   persistence_km   n\n";
  for (const auto& [lead, km] : all.lead_error_km) {
    const auto b = base.lead_error_km.find(lead);
    out << std::setw(4) << lead << std::setw(11) << fmt(km, 1) << std::setw(17)
        << (b == base.lead_error_km.end() ? std::string("-") : fmt(b->second, 1)) << std::setw(6)
        << all.lead_counts.at(lead) << '\n';
  }
  out << "wrote " << files.metrics.string() << ", " << files.comparison.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grid-based recurrent hurricane track forecaster", "gridtrack"};
  app.require_subcommand(1);
  Flags f;

  auto* ingest = app.add_subcommand("ingest", "Parse best tracks, write canonical CSV and print statistics");
  auto* audit = app.add_subcommand("audit", "Dataset, grid and normalization audit");
  auto* train_cmd = app.add_subcommand("train", "Build the grid, split storms and train the network");
  auto* forecast = app.add_subcommand("forecast", "Roll out a forecast for one storm");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained run against persistence");
  for (auto* cmd : {ingest, audit, train_cmd, forecast, evaluate}) add_common(cmd, f);
  for (auto* cmd : {forecast, evaluate}) cmd->add_option("--run", f.run, "Training run directory (default: --out)");
  forecast->add_option("--storm", f.storm, "Storm id, name, or NAME:YEAR");
  evaluate->add_option("--split", f.split, "Storms to evaluate: test, train or validation");
  evaluate->add_option("--external", f.external, "CSV of external track errors (lead_hours,source,error_km)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(f, out);
    if (audit->parsed()) return cmd_audit(f, out);
    if (train_cmd->parsed()) return cmd_train(f, out);
    if (forecast->parsed()) return cmd_forecast(f, out);
    return cmd_evaluate(f, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gridtrack
