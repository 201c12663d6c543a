#include "gridtrack/eval.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include "gridtrack/error.hpp"
#include "text.hpp"

namespace gridtrack {

namespace {

struct Accumulator {
  double tf_sum_sq = 0.0;
  std::size_t tf_elements = 0;
  double mae_sum = 0.0;
  std::size_t mae_steps = 0;
  std::map<int, std::pair<double, std::size_t>> leads;

  void add_forecast(const ForecastTrack& fc, const StormTrack& truth, const GridSpec& spec) {
    const auto errors = track_error_by_lead(fc, truth);
    if (errors.empty()) return;
    std::vector<CellIndex> predicted, actual;
    for (const auto& [lead, km] : errors) {
      auto& slot = leads[lead];
      slot.first += km;
      ++slot.second;
      const auto k = static_cast<std::size_t>(lead / kStepHours - 1);
      const Timestamp when = fc.origin_time + std::chrono::hours(lead);
      for (const auto& p : truth.points) {
        if (p.time != when) continue;
        if (spec.contains({p.lat, p.lon})) {
          const auto cell = encode_cell(spec, {p.lat, p.lon});
          predicted.push_back(fc.cells[k]);
          actual.push_back({cell.row, cell.col});
        }
        break;
      }
    }
    if (!predicted.empty()) {
      mae_sum += scaled_grid_mae(predicted, actual, spec) * static_cast<double>(predicted.size());
      mae_steps += predicted.size();
    }
  }

  [[nodiscard]] MetricsRecord record(const std::string& id) const {
    MetricsRecord r;
    r.storm_id = id;
    r.tf_elements = tf_elements;
    r.tf_mse = tf_elements ? tf_sum_sq / static_cast<double>(tf_elements) : 0.0;
    r.tf_rmse = std::sqrt(r.tf_mse);
    r.mae_steps = mae_steps;
    r.scaled_mae = mae_steps ? mae_sum / static_cast<double>(mae_steps) : 0.0;
    for (const auto& [lead, slot] : leads) {
      r.lead_error_km[lead] = slot.first / static_cast<double>(slot.second);
      r.lead_counts[lead] = slot.second;
    }
    return r;
  }
};

std::string file_safe(std::string s) {
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  out << "storm_id,lead_hours,error_km,n\n";
  for (const auto& r : records) {
    for (const auto& [lead, km] : r.lead_error_km) {
      out << r.storm_id << ',' << lead << ',' << text::format_double(km) << ',' << r.lead_counts.at(lead) << '\n';
    }
  }
  out << "# summary\n# storm_id,tf_mse,tf_rmse,tf_elements,scaled_grid_mae,mae_steps\n";
  for (const auto& r : records) {
    out << "# " << r.storm_id << ',' << text::format_double(r.tf_mse) << ',' << text::format_double(r.tf_rmse) << ','
        << r.tf_elements << ',' << text::format_double(r.scaled_mae) << ',' << r.mae_steps << '\n';
  }
}

void write_comparison_rows(std::ostream& out, const std::vector<MetricsRecord>& records, const char* source) {
  for (const auto& r : records) {
    out << r.storm_id << ',' << source << ",scaled_grid_mae," << text::format_double(r.scaled_mae) << '\n';
    out << r.storm_id << ',' << source << ",tf_mse," << text::format_double(r.tf_mse) << '\n';
    out << r.storm_id << ',' << source << ",tf_rmse," << text::format_double(r.tf_rmse) << '\n';
    if (const auto it = r.lead_error_km.find(48); it != r.lead_error_km.end()) {
      out << r.storm_id << ',' << source << ",track_error_km_48h," << text::format_double(it->second) << '\n';
    }
  }
}

}  // namespace

double scaled_grid_mae(const std::vector<CellIndex>& predicted, const std::vector<CellIndex>& truth,
                       const GridSpec& spec) {
  if (predicted.size() != truth.size()) throw ShapeError("scaled_grid_mae: length mismatch");
  if (predicted.empty()) throw ShapeError("scaled_grid_mae: empty sequences");
  const double row_span = spec.rows() > 1 ? spec.rows() - 1 : 1;
  const double col_span = spec.cols() > 1 ? spec.cols() - 1 : 1;
  double sum = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const double dr = std::abs(predicted[k].row - truth[k].row) / row_span;
    const double dc = std::abs(predicted[k].col - truth[k].col) / col_span;
    sum += 0.5 * (dr + dc);
  }
  return sum / static_cast<double>(predicted.size());
}

std::map<int, double> track_error_by_lead(const ForecastTrack& forecast, const StormTrack& truth) {
  std::map<Timestamp, GeoPoint> by_time;
  for (const auto& p : truth.points) by_time.emplace(p.time, GeoPoint{p.lat, p.lon});
  std::map<int, double> out;
  for (std::size_t k = 0; k < forecast.points.size(); ++k) {
    const int lead = static_cast<int>(k + 1) * kStepHours;
    const auto it = by_time.find(forecast.origin_time + std::chrono::hours(lead));
    if (it == by_time.end()) break;
    out[lead] = haversine_distance(forecast.points[k], it->second);
  }
  return out;
}

ForecastTrack persistence_forecast(const GridSpec& spec, const StormTrack& storm, std::size_t origin,
                                   int horizon_hours) {
  if (horizon_hours < 0 || horizon_hours % kStepHours != 0) {
    throw ConfigError("horizon must be a non-negative multiple of 6 hours");
  }
  if (origin < 1 || origin >= storm.points.size()) {
    throw ConfigError("persistence forecast needs two observed fixes up to the origin");
  }
  const auto& a = storm.points[origin - 1];
  const auto& b = storm.points[origin];
  const auto hours = std::chrono::duration_cast<std::chrono::hours>(b.time - a.time).count();
  const double steps = std::max(1.0, static_cast<double>(hours) / kStepHours);
  const double d_row = (spec.row_coord(b.lat) - spec.row_coord(a.lat)) / steps;
  const double d_col = (spec.col_coord(b.lon) - spec.col_coord(a.lon)) / steps;

  ForecastTrack fc;
  fc.storm_id = storm.id;
  fc.origin = origin;
  fc.origin_time = b.time;
  fc.origin_point = {b.lat, b.lon};
  const auto cell = encode_cell(spec, fc.origin_point);
  fc.origin_cell = {cell.row, cell.col};
  fc.horizon_hours = horizon_hours;
  CellWalker walker(spec, fc.origin_cell);
  for (int k = 0; k < horizon_hours / kStepHours; ++k) {
    const auto [next, clamped] = walker.advance(d_row, d_col);
    fc.cells.push_back(next);
    fc.points.push_back(decode_cell(spec, next));
    fc.clamped.push_back(clamped);
  }
  return fc;
}

StormEvaluation evaluate_storm(const ForecastModel& model, const GridSpec& spec, const StormTrack& storm,
                               std::size_t warmup, int horizon_hours) {
  if (warmup < 2) throw ConfigError("evaluation warmup must be at least 2");
  Accumulator m, b;

  const auto prepared = prepare_storm(storm, spec, model.features, model.scale);
  const auto tf = teacher_forced_error(model, prepared);
  m.tf_sum_sq = tf.sum_sq;
  m.tf_elements = tf.elements;
  // Persistence one-step: the previous target, zero at the first step.
  for (std::size_t t = 0; t < prepared.targets.rows(); ++t) {
    for (std::size_t c = 0; c < prepared.targets.cols(); ++c) {
      const double guess = t > 0 ? prepared.targets(t - 1, c) : 0.0;
      const double d = guess - prepared.targets(t, c);
      b.tf_sum_sq += d * d;
    }
  }
  b.tf_elements = prepared.targets.size();

  StormEvaluation out;
  const std::size_t n = storm.points.size();
  for (std::size_t history = warmup; history < n; ++history) {
    m.add_forecast(rollout(model, spec, storm, history, horizon_hours), storm, spec);
    b.add_forecast(persistence_forecast(spec, storm, history - 1, horizon_hours), storm, spec);
  }
  if (n >= warmup + 1) out.showcase = rollout(model, spec, storm, warmup, horizon_hours);
  out.model = m.record(storm.id);
  out.baseline = b.record(storm.id);
  return out;
}

MetricsRecord pool_metrics(const std::vector<MetricsRecord>& records, const std::string& id) {
  Accumulator acc;
  for (const auto& r : records) {
    acc.tf_sum_sq += r.tf_mse * static_cast<double>(r.tf_elements);
    acc.tf_elements += r.tf_elements;
    acc.mae_sum += r.scaled_mae * static_cast<double>(r.mae_steps);
    acc.mae_steps += r.mae_steps;
    for (const auto& [lead, km] : r.lead_error_km) {
      auto& slot = acc.leads[lead];
      const auto count = r.lead_counts.at(lead);
      slot.first += km * static_cast<double>(count);
      slot.second += count;
    }
  }
  return acc.record(id);
}

const std::vector<PublishedMae>& published_mae() {
  static const std::vector<PublishedMae> kTable{
      {"DEAN", 0.0842, 0.8651, 0.0572, 0.46115},
      {"SANDY", 0.0800, 0.2500, 0.5949, 0.42245},
      {"ISAAC", 0.0592, 0.7888, 0.3425, 0.56565},
  };
  return kTable;
}

std::vector<ExternalError> load_external_errors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<ExternalError> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (line_no == 1) {
      if (f.size() != 3 || f[0] != "lead_hours" || f[1] != "source" || f[2] != "error_km") {
        throw SchemaError("external errors header must be lead_hours,source,error_km");
      }
      continue;
    }
    if (f.size() != 3) throw ParseError(line_no, "expected lead_hours,source,error_km");
    const auto lead = text::parse_number<int>(f[0]);
    const auto km = text::parse_number<double>(f[2]);
    if (!lead) throw FieldError(line_no, std::string(f[0]), "bad lead");
    if (!km) throw FieldError(line_no, std::string(f[2]), "bad error");
    out.push_back({*lead, std::string(f[1]), *km});
  }
  return out;
}

ReportFiles emit_report(const std::vector<MetricsRecord>& metrics, const std::vector<MetricsRecord>& baseline,
                        const std::vector<Showcase>& showcases, const std::filesystem::path& out_dir,
                        const std::string& run_id, const std::vector<ExternalError>& external) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  ReportFiles files;
  files.metrics = out_dir / (run_id + "_metrics.csv");
  files.baseline_metrics = out_dir / (run_id + "_baseline_metrics.csv");
  files.comparison = out_dir / (run_id + "_comparison.csv");
  {
    auto out = open_out(files.metrics);
    write_metrics_csv(out, metrics);
  }
  {
    auto out = open_out(files.baseline_metrics);
    write_metrics_csv(out, baseline);
  }
  {
    auto out = open_out(files.comparison);
    out << "storm_id,source,metric,value\n";
    for (const auto& p : published_mae()) {
      out << p.storm << ",grid_rnn_published,scaled_grid_mae," << text::format_double(p.grid_rnn) << '\n'
          << p.storm << ",sparse_rnn_published,lat_mae," << text::format_double(p.sparse_rnn_lat) << '\n'
          << p.storm << ",sparse_rnn_published,lon_mae," << text::format_double(p.sparse_rnn_lon) << '\n'
          << p.storm << ",sparse_rnn_published,avg_mae," << text::format_double(p.sparse_rnn_avg) << '\n';
    }
    write_comparison_rows(out, metrics, "this_model");
    write_comparison_rows(out, baseline, "persistence");
    for (const auto& e : external) {
      out << "ALL," << e.source << ",track_error_km_" << e.lead_hours << "h," << text::format_double(e.error_km)
          << '\n';
    }
  }
  for (const auto& s : showcases) {
    auto path = out_dir / (run_id + "_" + file_safe(s.forecast.storm_id) + ".geojson");
    auto out = open_out(path);
    write_forecast_geojson(out, s.forecast, s.truth);
    files.geojson.push_back(std::move(path));
  }
  return files;
}

}  // namespace gridtrack
