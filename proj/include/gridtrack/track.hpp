#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridtrack {

using Timestamp = std::chrono::sys_seconds;

/// One 6-hourly best-track fix.
struct TrackPoint {
  Timestamp time{};
  double lat = 0.0;  // degrees north
  double lon = 0.0;  // degrees east, west negative
  std::optional<int> wind;      // knots
  std::optional<int> pressure;  // millibars
  std::string status;           // TD, TS, HU, ...

  /// All of lat, lon, wind and pressure present and in range.
  [[nodiscard]] bool valid() const noexcept;

  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct StormTrack {
  std::string id;    // basin + number + year, e.g. AL182012
  std::string name;  // uppercase
  std::vector<TrackPoint> points;

  /// Season year: the calendar year of the first fix.
  [[nodiscard]] int year() const;

  friend bool operator==(const StormTrack&, const StormTrack&) = default;
};

/// `YYYY-MM-DDTHH:MM:SSZ`
[[nodiscard]] std::string format_iso8601(Timestamp t);
[[nodiscard]] std::optional<Timestamp> parse_iso8601(std::string_view text);
[[nodiscard]] Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute);
[[nodiscard]] int year_of(Timestamp t);

}  // namespace gridtrack
