#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gridtrack/forecast.hpp"
#include "gridtrack/track.hpp"

namespace gridtrack::testing {

using StepFn = std::function<double(int)>;

// Six-hourly track from (lat, lon) where step t moves by (dlat(t), dlon(t)).
inline StormTrack synthetic_storm(const std::string& id, int fixes, double lat, double lon, const StepFn& dlat,
                                  const StepFn& dlon, int year = 2005) {
  StormTrack s;
  s.id = id;
  s.name = "SYN" + id;
  const auto start = make_timestamp(year, 8, 1, 0, 0);
  for (int t = 0; t < fixes; ++t) {
    if (t > 0) {
      lat += dlat(t);
      lon += dlon(t);
    }
    TrackPoint p;
    p.time = start + std::chrono::hours(6 * t);
    p.lat = lat;
    p.lon = lon;
    p.wind = 35 + 5 * (t % 7);
    p.pressure = 1000 - 2 * (t % 7);
    p.status = "TS";
    s.points.push_back(p);
  }
  return s;
}

inline StormTrack straight_storm(const std::string& id, int fixes, double lat, double lon, double dlat,
                                 double dlon, int year = 2005) {
  return synthetic_storm(
      id, fixes, lat, lon, [=](int) { return dlat; }, [=](int) { return dlon; }, year);
}

// A recurving track: drifts west-northwest, then turns north-east.
inline StormTrack recurving_storm(const std::string& id, int fixes, double lat, double lon, int year = 2005) {
  return synthetic_storm(
      id, fixes, lat, lon, [](int t) { return 0.25 + 0.03 * t; }, [](int t) { return -0.9 + 0.08 * t; }, year);
}

// Gentle sinusoidal wobble around a north-west heading.
inline StormTrack wobbling_storm(const std::string& id, int fixes, double lat, double lon, int year = 2005) {
  return synthetic_storm(
      id, fixes, lat, lon, [](int t) { return 0.4 + 0.1 * std::sin(t / 3.0); },
      [](int t) { return -0.6 + 0.1 * std::cos(t / 3.0); }, year);
}

// A small varied set of storms spread over the western Atlantic.
inline std::vector<StormTrack> synthetic_season(int count, int fixes = 16) {
  std::vector<StormTrack> out;
  for (int k = 0; k < count; ++k) {
    const double lat0 = 12.0 + (k % 5);
    const double lon0 = -40.0 - 3.0 * (k % 7);
    const double bend = 0.01 * (k % 4);
    out.push_back(synthetic_storm(
        "SY" + std::to_string(100 + k), fixes + k % 5, lat0, lon0, [=](int t) { return 0.3 + bend * t; },
        [=](int t) { return -0.7 + 0.05 * t + bend; }, 2000 + k % 10));
  }
  return out;
}

inline SplitPlan train_only(const std::vector<StormTrack>& storms) {
  SplitPlan plan;
  for (const auto& s : storms) plan.train_ids.push_back(s.id);
  return plan;
}

}  // namespace gridtrack::testing
