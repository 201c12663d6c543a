#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "gridtrack/track.hpp"

namespace gridtrack {

/// Parses HURDAT2 text. Off-cadence rows (landfall and intensity-peak
/// records not on 00/06/12/18 UTC) are consumed but not kept.
[[nodiscard]] std::vector<StormTrack> parse_hurdat2(std::istream& in);
[[nodiscard]] std::vector<StormTrack> parse_hurdat2_file(const std::string& path);

inline constexpr const char* kTrackCsvHeader = "storm_id,name,timestamp,lat,lon,wind_kt,pressure_mb";

[[nodiscard]] std::vector<StormTrack> parse_track_csv(std::istream& in);
[[nodiscard]] std::vector<StormTrack> parse_track_csv_file(const std::string& path);
void write_track_csv(std::ostream& out, const std::vector<StormTrack>& tracks);

struct YearWindow {
  int first = 1920;
  int last = 2012;
  [[nodiscard]] bool contains(int year) const noexcept { return year >= first && year <= last; }
};

struct FilterResult {
  std::vector<StormTrack> tracks;
  std::size_t dropped_points = 0;     // invalid points removed from kept-window storms
  std::size_t dropped_storms = 0;     // storms left with fewer than two points
  std::size_t outside_window = 0;     // storms outside the year window
};

[[nodiscard]] FilterResult filter_valid(const std::vector<StormTrack>& tracks, YearWindow window);

struct TrackStats {
  std::vector<std::size_t> point_counts;  // parallel to the input tracks
  std::vector<double> distances_km;       // cumulative great-circle length
  double median_points = 0.0;
  std::size_t total_points = 0;
  std::size_t min_distance_index = 0;
  std::size_t max_distance_index = 0;
  double points_distance_pearson = 0.0;  // NaN when undefined
};

[[nodiscard]] TrackStats track_stats(const std::vector<StormTrack>& tracks);

}  // namespace gridtrack
