#include "gridtrack/geo.hpp"

#include <cmath>
#include <numbers>

#include "gridtrack/error.hpp"

namespace gridtrack {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double haversine_distance(GeoPoint a, GeoPoint b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double initial_bearing(GeoPoint a, GeoPoint b) {
  if (a.lat == b.lat && a.lon == b.lon) throw GeometryError("bearing undefined for coincident points");
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  double deg = std::atan2(y, x) / kDegToRad;
  deg = std::fmod(deg + 360.0, 360.0);
  if (deg >= 360.0 || deg == 0.0) deg = 0.0;  // also folds -0
  return deg;
}

}  // namespace gridtrack
