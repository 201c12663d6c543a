#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gridtrack/grid.hpp"
#include "gridtrack/matrix.hpp"
#include "gridtrack/track.hpp"

namespace gridtrack {

/// Per-step network input before normalization.
struct FeatureTuple {
  double wind = 0.0;      // knots
  double lat = 0.0;
  double lon = 0.0;
  double bearing = 0.0;   // degrees, direction of the step into this point
  double distance = 0.0;  // km, length of the step into this point
  int grid_row = 0;
  int grid_col = 0;
};

enum class Feature { wind, lat, lon, bearing, distance, grid_row, grid_col, bearing_sin, bearing_cos };

[[nodiscard]] std::string_view feature_name(Feature f) noexcept;
[[nodiscard]] Feature parse_feature(std::string_view name);

/// wind, lat, lon, bearing, distance, grid_row, grid_col
[[nodiscard]] const std::vector<Feature>& default_features();

/// Parses a comma-separated feature list. With `bearing_sincos`, any
/// `bearing` entry is replaced by the bearing_sin/bearing_cos pair.
[[nodiscard]] std::vector<Feature> parse_feature_list(std::string_view text, bool bearing_sincos = false);
[[nodiscard]] std::string format_feature_list(const std::vector<Feature>& features);

/// One tuple per point. Coincident consecutive fixes keep the previous bearing.
[[nodiscard]] std::vector<FeatureTuple> derive_features(const StormTrack& track, const GridSpec& spec);

[[nodiscard]] double feature_value(const FeatureTuple& t, Feature f) noexcept;
[[nodiscard]] Matrix feature_matrix(const std::vector<FeatureTuple>& tuples, const std::vector<Feature>& columns);

/// Per-column z-scores with population statistics.
struct NormalizedSequence {
  std::string storm_id;
  Matrix values;
  std::vector<double> mean;
  std::vector<double> stddev;  // 0 marks a zero-variance column
};

[[nodiscard]] NormalizedSequence normalize(const Matrix& raw, std::string storm_id = {});

/// Z-scores `raw` with externally supplied statistics.
[[nodiscard]] Matrix apply_normalization(const Matrix& raw, const std::vector<double>& mean,
                                         const std::vector<double>& stddev);
[[nodiscard]] Matrix inverse_transform(const NormalizedSequence& seq);

/// CSV with a storm_id column followed by one column per feature.
void write_feature_csv(std::ostream& out, const std::vector<std::string>& storm_ids,
                       const std::vector<std::vector<FeatureTuple>>& features,
                       const std::vector<Feature>& columns);

}  // namespace gridtrack
