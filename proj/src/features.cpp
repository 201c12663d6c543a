#include "gridtrack/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include "gridtrack/error.hpp"
#include "text.hpp"

namespace gridtrack {

namespace {

struct FeatureInfo {
  Feature feature;
  std::string_view name;
};

constexpr std::array<FeatureInfo, 9> kFeatureInfo{{
    {Feature::wind, "wind"},
    {Feature::lat, "lat"},
    {Feature::lon, "lon"},
    {Feature::bearing, "bearing"},
    {Feature::distance, "distance"},
    {Feature::grid_row, "grid_row"},
    {Feature::grid_col, "grid_col"},
    {Feature::bearing_sin, "bearing_sin"},
    {Feature::bearing_cos, "bearing_cos"},
}};

// Below this the column is treated as constant.
constexpr double kZeroVariance = 1e-12;

}  // namespace

std::string_view feature_name(Feature f) noexcept {
  for (const auto& info : kFeatureInfo) {
    if (info.feature == f) return info.name;
  }
  return "?";
}

Feature parse_feature(std::string_view name) {
  for (const auto& info : kFeatureInfo) {
    if (info.name == name) return info.feature;
  }
  throw ConfigError("unknown feature '" + std::string(name) + "'");
}

const std::vector<Feature>& default_features() {
  static const std::vector<Feature> kDefault{Feature::wind,     Feature::lat,      Feature::lon,     Feature::bearing,
                                             Feature::distance, Feature::grid_row, Feature::grid_col};
  return kDefault;
}

std::vector<Feature> parse_feature_list(std::string_view text, bool bearing_sincos) {
  std::vector<Feature> out;
  for (const auto token : text::split(text, ',')) {
    if (token.empty()) continue;
    const Feature f = parse_feature(token);
    if (bearing_sincos && f == Feature::bearing) {
      out.push_back(Feature::bearing_sin);
      out.push_back(Feature::bearing_cos);
    } else {
      out.push_back(f);
    }
  }
  if (out.empty()) throw ConfigError("empty feature list");
  return out;
}

std::string format_feature_list(const std::vector<Feature>& features) {
  std::string out;
  for (const auto f : features) {
    if (!out.empty()) out += ',';
    out += feature_name(f);
  }
  return out;
}

std::vector<FeatureTuple> derive_features(const StormTrack& track, const GridSpec& spec) {
  std::vector<FeatureTuple> out;
  out.reserve(track.points.size());
  double bearing = 0.0;
  for (std::size_t t = 0; t < track.points.size(); ++t) {
    const auto& p = track.points[t];
    const GeoPoint here{p.lat, p.lon};
    const auto cell = encode_cell(spec, here);
    FeatureTuple ft;
    ft.wind = p.wind.value_or(0);
    ft.lat = p.lat;
    ft.lon = p.lon;
    ft.grid_row = cell.row;
    ft.grid_col = cell.col;
    if (t > 0) {
      const GeoPoint prev{track.points[t - 1].lat, track.points[t - 1].lon};
      ft.distance = haversine_distance(prev, here);
      if (!(prev == here)) bearing = initial_bearing(prev, here);
    }
    ft.bearing = bearing;
    out.push_back(ft);
  }
  return out;
}

double feature_value(const FeatureTuple& t, Feature f) noexcept {
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  switch (f) {
    case Feature::wind: return t.wind;
    case Feature::lat: return t.lat;
    case Feature::lon: return t.lon;
    case Feature::bearing: return t.bearing;
    case Feature::distance: return t.distance;
    case Feature::grid_row: return t.grid_row;
    case Feature::grid_col: return t.grid_col;
    case Feature::bearing_sin: return std::sin(t.bearing * kDegToRad);
    case Feature::bearing_cos: return std::cos(t.bearing * kDegToRad);
  }
  return 0.0;
}

Matrix feature_matrix(const std::vector<FeatureTuple>& tuples, const std::vector<Feature>& columns) {
  Matrix m(tuples.size(), columns.size());
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) m(r, c) = feature_value(tuples[r], columns[c]);
  }
  return m;
}

NormalizedSequence normalize(const Matrix& raw, std::string storm_id) {
  if (raw.rows() < 2) throw StatisticsError("normalize: need at least two rows");
  NormalizedSequence out;
  out.storm_id = std::move(storm_id);
  out.mean.assign(raw.cols(), 0.0);
  out.stddev.assign(raw.cols(), 0.0);
  const double n = static_cast<double>(raw.rows());
  for (std::size_t c = 0; c < raw.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < raw.rows(); ++r) sum += raw(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < raw.rows(); ++r) ss += (raw(r, c) - mean) * (raw(r, c) - mean);
    const double sd = std::sqrt(ss / n);
    out.mean[c] = mean;
    out.stddev[c] = sd > kZeroVariance * std::max(1.0, std::abs(mean)) ? sd : 0.0;
  }
  out.values = apply_normalization(raw, out.mean, out.stddev);
  return out;
}

Matrix apply_normalization(const Matrix& raw, const std::vector<double>& mean, const std::vector<double>& stddev) {
  if (mean.size() != raw.cols() || stddev.size() != raw.cols()) {
    throw ShapeError("normalization statistics do not match column count");
  }
  Matrix out(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      out(r, c) = stddev[c] > 0.0 ? (raw(r, c) - mean[c]) / stddev[c] : 0.0;
    }
  }
  return out;
}

Matrix inverse_transform(const NormalizedSequence& seq) {
  Matrix out(seq.values.rows(), seq.values.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = seq.values(r, c) * seq.stddev[c] + seq.mean[c];
  }
  return out;
}

void write_feature_csv(std::ostream& out, const std::vector<std::string>& storm_ids,
                       const std::vector<std::vector<FeatureTuple>>& features, const std::vector<Feature>& columns) {
  if (storm_ids.size() != features.size()) throw ShapeError("write_feature_csv: id/feature count mismatch");
  out << "storm_id,step";
  for (const auto f : columns) out << ',' << feature_name(f);
  out << '\n';
  for (std::size_t s = 0; s < storm_ids.size(); ++s) {
    for (std::size_t t = 0; t < features[s].size(); ++t) {
      out << storm_ids[s] << ',' << t;
      for (const auto f : columns) out << ',' << text::format_double(feature_value(features[s][t], f));
      out << '\n';
    }
  }
}

}  // namespace gridtrack
