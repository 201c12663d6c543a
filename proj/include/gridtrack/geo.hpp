#pragma once

namespace gridtrack {

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kKmPerMile = 1.609344;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance on the mean-radius sphere, in km.
[[nodiscard]] double haversine_distance(GeoPoint a, GeoPoint b) noexcept;

/// Forward azimuth at `a` towards `b`, clockwise from true north, in [0, 360).
/// Throws GeometryError for coincident points.
[[nodiscard]] double initial_bearing(GeoPoint a, GeoPoint b);

}  // namespace gridtrack
