#include "gridtrack/forecast.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "gridtrack/error.hpp"
#include "text.hpp"

namespace gridtrack {

namespace {

constexpr const char* kCheckpointMagic = "gridtrack-checkpoint 1";

/// round(n * percent / 100), ties to even, in exact integer arithmetic.
std::size_t percent_round_half_even(std::size_t n, std::size_t percent) {
  const std::size_t num = n * percent;
  const std::size_t q = num / 100;
  const std::size_t r = num % 100;
  if (r > 50 || (r == 50 && q % 2 == 1)) return q + 1;
  return q;
}

double step_count(Timestamp from, Timestamp to) {
  const auto hours = std::chrono::duration_cast<std::chrono::hours>(to - from).count();
  return std::max(1.0, static_cast<double>(hours) / kStepHours);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------
// Splits

SplitPlan make_split(const std::vector<StormTrack>& storms, std::uint64_t seed) {
  if (storms.empty()) throw ConfigError("make_split: no storms");
  std::vector<std::string> ids;
  ids.reserve(storms.size());
  std::unordered_set<std::string> seen;
  for (const auto& s : storms) {
    if (!seen.insert(s.id).second) throw ConfigError("duplicate storm id " + s.id);
    ids.push_back(s.id);
  }
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(ids.begin(), ids.end());

  const std::size_t n_test = percent_round_half_even(ids.size(), 15);
  const std::size_t n_val = percent_round_half_even(ids.size() - n_test, 10);
  SplitPlan plan;
  plan.seed = seed;
  plan.test_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  plan.validation_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test),
                             ids.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  plan.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), ids.end());
  return plan;
}

void save_split(std::ostream& out, const SplitPlan& plan) {
  out << "seed " << plan.seed << '\n';
  for (const auto& id : plan.train_ids) out << "train " << id << '\n';
  for (const auto& id : plan.validation_ids) out << "validation " << id << '\n';
  for (const auto& id : plan.test_ids) out << "test " << id << '\n';
}

SplitPlan load_split(std::istream& in) {
  SplitPlan plan;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key >> value)) continue;
    if (key == "seed") {
      const auto s = text::parse_number<std::uint64_t>(value);
      if (!s) throw FieldError(line_no, value, "bad seed");
      plan.seed = *s;
    } else if (key == "train") {
      plan.train_ids.push_back(value);
    } else if (key == "validation") {
      plan.validation_ids.push_back(value);
    } else if (key == "test") {
      plan.test_ids.push_back(value);
    } else {
      throw ParseError(line_no, "unknown split key '" + key + "'");
    }
  }
  return plan;
}

std::vector<StormTrack> select_storms(const std::vector<StormTrack>& storms, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const StormTrack*> by_id;
  for (const auto& s : storms) by_id.emplace(s.id, &s);
  std::vector<StormTrack> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw ConfigError("storm " + id + " not in dataset");
    out.push_back(*it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(std::ostream& out, const ForecastModel& model) {
  const auto& net = model.net;
  out << kCheckpointMagic << '\n'
      << "inputs " << net.shape.inputs << '\n'
      << "hidden " << net.shape.hidden << '\n'
      << "outputs " << net.shape.outputs << '\n'
      << "layers " << net.shape.layers << '\n'
      << "dropout " << text::format_double(net.dropout) << '\n'
      << "seed " << net.seed << '\n'
      << "features " << format_feature_list(model.features) << '\n'
      << "scale_row " << text::format_double(model.scale.row) << '\n'
      << "scale_col " << text::format_double(model.scale.col) << '\n'
      << "grid_ref " << model.grid_ref << '\n'
      << "normalization_ref " << model.normalization_ref << '\n';
  for_each_tensor(net.params, [&](const std::string& name, const Matrix& m) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        out << text::format_double(row[c]);
      }
      out << '\n';
    }
  });
  out << "end\n";
}

ForecastModel load_checkpoint(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kCheckpointMagic) throw ParseError(1, "not a gridtrack checkpoint");

  std::map<std::string, std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("tensor ", 0) == 0) break;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw ParseError(line_no, "expected 'key value'");
    header[line.substr(0, sp)] = line.substr(sp + 1);
  }
  const auto get = [&](const std::string& key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw SchemaError("checkpoint missing '" + key + "'");
    return it->second;
  };
  const auto get_int = [&](const std::string& key) {
    const auto v = text::parse_number<int>(get(key));
    if (!v) throw FieldError(0, get(key), "bad integer for " + key);
    return *v;
  };
  const auto get_double = [&](const std::string& key) {
    const auto v = text::parse_number<double>(get(key));
    if (!v) throw FieldError(0, get(key), "bad number for " + key);
    return *v;
  };

  ForecastModel model;
  const auto seed = text::parse_number<std::uint64_t>(get("seed"));
  if (!seed) throw FieldError(0, get("seed"), "bad seed");
  InitOptions opts;
  opts.dropout = get_double("dropout");
  opts.seed = *seed;
  opts.layers = get_int("layers");
  opts.allow_layer_override = true;
  model.net = init_network(get_int("inputs"), get_int("hidden"), get_int("outputs"), opts);
  model.features = parse_feature_list(get("features"));
  model.scale = {get_double("scale_row"), get_double("scale_col")};
  model.grid_ref = get("grid_ref");
  model.normalization_ref = get("normalization_ref");
  if (model.features.size() != static_cast<std::size_t>(model.net.shape.inputs)) {
    throw SchemaError("checkpoint feature list does not match input width");
  }

  bool first = true;
  for_each_tensor(model.net.params, [&](const std::string& name, Matrix& m) {
    if (!first) {
      if (!std::getline(in, line)) throw StructureError("checkpoint truncated before " + name);
      ++line_no;
    }
    first = false;
    std::istringstream hs(line);
    std::string tag, tname;
    std::size_t rows = 0, cols = 0;
    hs >> tag >> tname >> rows >> cols;
    if (tag != "tensor" || tname != name || rows != m.rows() || cols != m.cols()) {
      throw ParseError(line_no, "expected tensor " + name);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw StructureError("checkpoint truncated in " + name);
      ++line_no;
      const auto values = text::split(line, ' ');
      if (values.size() != cols) throw ParseError(line_no, "wrong value count in " + name);
      for (std::size_t c = 0; c < cols; ++c) {
        const auto v = text::parse_number<double>(values[c]);
        if (!v) throw FieldError(line_no, std::string(values[c]), "bad tensor value");
        m(r, c) = *v;
      }
    }
  });
  if (!std::getline(in, line) || line != "end") throw StructureError("checkpoint missing end marker");
  return model;
}

void save_checkpoint_file(const std::string& path, const ForecastModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  save_checkpoint(out, model);
  if (!out) throw IoError("write failed: " + path);
}

ForecastModel load_checkpoint_file(const std::string& path) {
  auto in = open_in(path);
  return load_checkpoint(in);
}

// ---------------------------------------------------------------------------
// Data preparation

DisplacementScale displacement_scale(const std::vector<StormTrack>& tracks, const GridSpec& spec) {
  DisplacementScale s{0.0, 0.0};
  for (const auto& t : tracks) {
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      const auto& a = t.points[i - 1];
      const auto& b = t.points[i];
      const double steps = step_count(a.time, b.time);
      s.row = std::max(s.row, std::abs(spec.row_coord(b.lat) - spec.row_coord(a.lat)) / steps);
      s.col = std::max(s.col, std::abs(spec.col_coord(b.lon) - spec.col_coord(a.lon)) / steps);
    }
  }
  if (s.row == 0.0) s.row = 1.0;
  if (s.col == 0.0) s.col = 1.0;
  return s;
}

PreparedStorm prepare_storm(const StormTrack& storm, const GridSpec& spec, const std::vector<Feature>& features,
                            DisplacementScale scale) {
  if (storm.points.size() < 2) throw ConfigError("storm " + storm.id + " has fewer than two fixes");
  const auto tuples = derive_features(storm, spec);
  const auto norm = normalize(feature_matrix(tuples, features), storm.id);
  const std::size_t steps = storm.points.size() - 1;

  PreparedStorm out;
  out.id = storm.id;
  out.mean = norm.mean;
  out.stddev = norm.stddev;
  out.inputs = Matrix(steps, features.size());
  out.targets = Matrix(steps, 2);
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy(norm.values.row(t).begin(), norm.values.row(t).end(), out.inputs.row(t).begin());
    const auto& a = storm.points[t];
    const auto& b = storm.points[t + 1];
    const double n = step_count(a.time, b.time);
    out.targets(t, 0) = (spec.row_coord(b.lat) - spec.row_coord(a.lat)) / n / scale.row;
    out.targets(t, 1) = (spec.col_coord(b.lon) - spec.col_coord(a.lon)) / n / scale.col;
  }
  return out;
}

void write_normalization_csv(std::ostream& out, const std::vector<PreparedStorm>& storms,
                             const std::vector<Feature>& features) {
  out << "storm_id,feature,mean,stddev\n";
  for (const auto& s : storms) {
    for (std::size_t c = 0; c < features.size(); ++c) {
      out << s.id << ',' << feature_name(features[c]) << ',' << text::format_double(s.mean[c]) << ','
          << text::format_double(s.stddev[c]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Training

TeacherForcedError teacher_forced_error(const ForecastModel& model, const PreparedStorm& storm) {
  const auto trace = forward(model.net, storm.inputs);
  TeacherForcedError e;
  const auto p = trace.outputs.data();
  const auto q = storm.targets.data();
  for (std::size_t k = 0; k < p.size(); ++k) e.sum_sq += (p[k] - q[k]) * (p[k] - q[k]);
  e.elements = p.size();
  return e;
}

TeacherForcedError teacher_forced_error(const ForecastModel& model, const std::vector<PreparedStorm>& storms) {
  TeacherForcedError total;
  for (const auto& s : storms) {
    const auto e = teacher_forced_error(model, s);
    total.sum_sq += e.sum_sq;
    total.elements += e.elements;
  }
  return total;
}

TrainingResult train(const std::vector<StormTrack>& storms, const GridSpec& spec, const SplitPlan& plan,
                     const TrainingConfig& cfg, const EpochCallback& on_epoch) {
  if (cfg.epochs <= 0 || cfg.patience <= 0 || cfg.hidden <= 0) {
    throw ConfigError("epochs, patience and hidden width must be positive");
  }
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
  const auto train_tracks = select_storms(storms, plan.train_ids);
  const auto val_tracks = select_storms(storms, plan.validation_ids);
  if (train_tracks.empty()) throw ConfigError("no training storms");

  TrainingResult result;
  auto& model = result.model;
  model.features = cfg.features;
  model.scale = displacement_scale(train_tracks, spec);

  std::vector<PreparedStorm> train_set, val_set;
  for (const auto& s : train_tracks) train_set.push_back(prepare_storm(s, spec, cfg.features, model.scale));
  for (const auto& s : val_tracks) val_set.push_back(prepare_storm(s, spec, cfg.features, model.scale));

  InitOptions init;
  init.dropout = cfg.dropout;
  init.seed = cfg.seed;
  init.layers = cfg.layers;
  init.allow_layer_override = cfg.allow_layer_override;
  model.net = init_network(static_cast<int>(cfg.features.size()), cfg.hidden, 2, init);

  Rng order_rng(derive_seed(cfg.seed, "order"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  LstmParams best = model.net.params;
  double best_score = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    order_rng.shuffle(order.begin(), order.end());
    for (const auto idx : order) {
      const auto& s = train_set[idx];
      const auto trace = forward(model.net, s.inputs, true, &dropout_rng);
      const auto loss = mse_loss(trace.outputs, s.targets);
      if (!std::isfinite(loss.loss)) throw DivergenceError(epoch, s.id);
      const auto grads = backward(model.net, trace, loss.grad);
      sgd_step(model.net, grads, cfg.lr, cfg.clip_norm);
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_mse = teacher_forced_error(model, train_set).mse();
    row.val_mse = val_set.empty() ? row.train_mse : teacher_forced_error(model, val_set).mse();
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(row.train_mse) || !std::isfinite(row.val_mse)) throw DivergenceError(epoch, "(evaluation)");
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);

    if (row.val_mse < best_score) {
      best_score = row.val_mse;
      best = model.net.params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.net.params = std::move(best);
  result.prepared = std::move(train_set);
  result.prepared.insert(result.prepared.end(), std::make_move_iterator(val_set.begin()),
                         std::make_move_iterator(val_set.end()));
  return result;
}

// ---------------------------------------------------------------------------
// Rollout

std::pair<CellIndex, bool> CellWalker::advance(double d_row, double d_col) {
  const double want_row = d_row + carry_row_;
  const double want_col = d_col + carry_col_;
  const double step_row = std::round(want_row);
  const double step_col = std::round(want_col);
  carry_row_ = want_row - step_row;
  carry_col_ = want_col - step_col;
  const CellIndex next{cell_.row + static_cast<int>(step_row), cell_.col + static_cast<int>(step_col)};
  const auto [clamped, moved] = clamp_cell(*spec_, next);
  cell_ = clamped;
  return {clamped, moved};
}

ForecastTrack rollout(const ForecastModel& model, const GridSpec& spec, const StormTrack& storm,
                      std::size_t warmup_steps, int horizon_hours) {
  if (horizon_hours < 0 || horizon_hours % kStepHours != 0 || horizon_hours > kMaxHorizonHours) {
    throw ConfigError("horizon must be a multiple of 6 hours in [0, 120]");
  }
  if (warmup_steps < 2) throw ConfigError("rollout needs at least 2 warmup steps");
  if (storm.points.size() < warmup_steps + 1) {
    throw ConfigError("storm " + storm.id + " has " + std::to_string(storm.points.size()) +
                      " fixes; insufficient for warmup " + std::to_string(warmup_steps));
  }

  StormTrack history{storm.id, storm.name,
                     {storm.points.begin(), storm.points.begin() + static_cast<std::ptrdiff_t>(warmup_steps)}};
  const auto tuples = derive_features(history, spec);
  const auto norm = normalize(feature_matrix(tuples, model.features), storm.id);

  LstmState state(model.net);
  std::vector<double> y;
  for (std::size_t t = 0; t < warmup_steps; ++t) y = state.step(model.net, norm.values.row(t));

  const auto& last = history.points.back();
  ForecastTrack fc;
  fc.storm_id = storm.id;
  fc.origin = warmup_steps - 1;
  fc.origin_time = last.time;
  fc.origin_point = {last.lat, last.lon};
  const auto origin_cell = encode_cell(spec, fc.origin_point);
  fc.origin_cell = {origin_cell.row, origin_cell.col};
  fc.horizon_hours = horizon_hours;

  CellWalker walker(spec, fc.origin_cell);
  GeoPoint prev = fc.origin_point;
  double bearing = tuples.back().bearing;
  const int steps = horizon_hours / kStepHours;
  Matrix raw(1, model.features.size());
  for (int k = 0; k < steps; ++k) {
    const auto [cell, clamped] = walker.advance(y[0] * model.scale.row, y[1] * model.scale.col);
    const GeoPoint center = decode_cell(spec, cell);
    fc.cells.push_back(cell);
    fc.points.push_back(center);
    fc.clamped.push_back(clamped);
    if (k + 1 == steps) break;

    FeatureTuple ft;
    ft.wind = tuples.back().wind;
    ft.lat = center.lat;
    ft.lon = center.lon;
    ft.distance = haversine_distance(prev, center);
    if (!(prev == center)) bearing = initial_bearing(prev, center);
    ft.bearing = bearing;
    ft.grid_row = cell.row;
    ft.grid_col = cell.col;
    for (std::size_t c = 0; c < model.features.size(); ++c) raw(0, c) = feature_value(ft, model.features[c]);
    const auto x = apply_normalization(raw, norm.mean, norm.stddev);
    y = state.step(model.net, x.row(0));
    prev = center;
  }
  return fc;
}

void write_forecast_csv(std::ostream& out, const std::vector<ForecastTrack>& forecasts) {
  out << "storm_id,step,hours_ahead,row,col,lat,lon,clamped\n";
  for (const auto& fc : forecasts) {
    for (std::size_t k = 0; k < fc.cells.size(); ++k) {
      out << fc.storm_id << ',' << k + 1 << ',' << (k + 1) * kStepHours << ',' << fc.cells[k].row << ','
          << fc.cells[k].col << ',' << text::format_double(fc.points[k].lat) << ','
          << text::format_double(fc.points[k].lon) << ',' << (fc.clamped[k] ? 1 : 0) << '\n';
    }
  }
}

void write_forecast_geojson(std::ostream& out, const ForecastTrack& forecast, const StormTrack& truth) {
  using nlohmann::ordered_json;
  const auto line = [](const std::vector<GeoPoint>& pts) {
    ordered_json coords = ordered_json::array();
    for (const auto& p : pts) coords.push_back({p.lon, p.lat});
    return ordered_json{{"type", "LineString"}, {"coordinates", coords}};
  };
  const auto feature = [&](const char* kind, const std::vector<GeoPoint>& pts) {
    return ordered_json{{"type", "Feature"},
                        {"properties", {{"storm_id", forecast.storm_id}, {"name", truth.name}, {"kind", kind}}},
                        {"geometry", line(pts)}};
  };

  ordered_json features = ordered_json::array();
  std::vector<GeoPoint> observed;
  for (const auto& p : truth.points) observed.push_back({p.lat, p.lon});
  if (observed.size() >= 2) features.push_back(feature("observed", observed));
  if (!forecast.points.empty()) {
    std::vector<GeoPoint> predicted{forecast.origin_point};
    predicted.insert(predicted.end(), forecast.points.begin(), forecast.points.end());
    features.push_back(feature("predicted", predicted));
  }
  ordered_json doc{{"type", "FeatureCollection"}, {"features", features}};
  out << doc.dump(2) << '\n';
}

}  // namespace gridtrack
