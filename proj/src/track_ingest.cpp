#include "gridtrack/track_ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "gridtrack/error.hpp"
#include "gridtrack/geo.hpp"
#include "gridtrack/stats.hpp"
#include "text.hpp"

namespace gridtrack {

namespace {

constexpr int kMissingWind = -99;
constexpr int kMissingPressure = -999;

std::vector<std::string_view> fields_without_trailing_empty(std::string_view line) {
  auto fields = text::split(line, ',');
  while (!fields.empty() && fields.back().empty()) fields.pop_back();
  return fields;
}

bool looks_like_header(const std::vector<std::string_view>& fields) {
  if (fields.empty() || fields[0].size() != 8) return false;
  const auto id = fields[0];
  return std::isalpha(static_cast<unsigned char>(id[0])) && std::isalpha(static_cast<unsigned char>(id[1])) &&
         std::all_of(id.begin() + 2, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

/// "38.8N" -> 38.8, "70.9W" -> -70.9
std::optional<double> parse_hemisphere_coord(std::string_view token, char pos, char neg) {
  if (token.size() < 2) return std::nullopt;
  const char hemi = static_cast<char>(std::toupper(static_cast<unsigned char>(token.back())));
  if (hemi != pos && hemi != neg) return std::nullopt;
  const auto value = text::parse_number<double>(token.substr(0, token.size() - 1));
  if (!value || *value < 0.0) return std::nullopt;
  return hemi == neg ? -*value : *value;
}

std::optional<int> parse_fixed_digits(std::string_view token, std::size_t width) {
  if (token.size() != width) return std::nullopt;
  if (!std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return std::nullopt;
  }
  return text::parse_number<int>(token);
}

std::optional<int> parse_wind(std::size_t line, std::string_view token) {
  const auto v = text::parse_number<int>(token);
  if (!v) throw FieldError(line, std::string(token), "unparseable wind");
  if (*v == kMissingWind) return std::nullopt;
  if (*v < 0) throw FieldError(line, std::string(token), "negative wind");
  return v;
}

std::optional<int> parse_pressure(std::size_t line, std::string_view token) {
  const auto v = text::parse_number<int>(token);
  if (!v) throw FieldError(line, std::string(token), "unparseable pressure");
  if (*v == kMissingPressure) return std::nullopt;
  if (*v < 800 || *v > 1100) throw FieldError(line, std::string(token), "pressure out of range");
  return v;
}

void check_coordinate_range(std::size_t line, std::string_view token, double lat, double lon) {
  if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) {
    throw FieldError(line, std::string(token), "coordinate out of range");
  }
}

void require_increasing(const StormTrack& storm) {
  for (std::size_t i = 1; i < storm.points.size(); ++i) {
    if (storm.points[i].time <= storm.points[i - 1].time) {
      throw OrderingError(storm.id, "timestamps not strictly increasing at " +
                                        format_iso8601(storm.points[i].time));
    }
  }
}

TrackPoint parse_hurdat2_row(std::size_t line_no, const std::vector<std::string_view>& f, bool& on_cadence) {
  if (f.size() < 8) {
    throw ParseError(line_no, "data row has " + std::to_string(f.size()) + " fields, expected at least 8");
  }
  const auto date = parse_fixed_digits(f[0], 8);
  if (!date) throw FieldError(line_no, std::string(f[0]), "unparseable date");
  const auto hhmm = parse_fixed_digits(f[1], 4);
  if (!hhmm) throw FieldError(line_no, std::string(f[1]), "unparseable time");

  const int year = *date / 10000;
  const unsigned month = static_cast<unsigned>(*date / 100 % 100);
  const unsigned day = static_cast<unsigned>(*date % 100);
  const int hour = *hhmm / 100;
  const int minute = *hhmm % 100;
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) throw FieldError(line_no, std::string(f[0]), "invalid date");
  if (hour > 23 || minute > 59) throw FieldError(line_no, std::string(f[1]), "invalid time");

  TrackPoint p;
  p.time = make_timestamp(year, month, day, hour, minute);
  p.status = std::string(f[3]);
  const auto lat = parse_hemisphere_coord(f[4], 'N', 'S');
  if (!lat) throw FieldError(line_no, std::string(f[4]), "unparseable latitude");
  const auto lon = parse_hemisphere_coord(f[5], 'E', 'W');
  if (!lon) throw FieldError(line_no, std::string(f[5]), "unparseable longitude");
  check_coordinate_range(line_no, f[4], *lat, *lon);
  p.lat = *lat;
  p.lon = *lon;
  p.wind = parse_wind(line_no, f[6]);
  p.pressure = parse_pressure(line_no, f[7]);
  on_cadence = minute == 0 && hour % 6 == 0;
  return p;
}

std::string_view field_or_empty(const std::vector<std::string_view>& f, std::size_t i) {
  return i < f.size() ? f[i] : std::string_view{};
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

}  // namespace

std::vector<StormTrack> parse_hurdat2(std::istream& in) {
  std::vector<StormTrack> storms;
  std::string line;
  std::size_t line_no = 0;

  // Header currently being filled and its declared row count.
  StormTrack* current = nullptr;
  std::size_t expected = 0;
  std::size_t seen = 0;
  std::size_t header_line = 0;

  const auto finish_current = [&](std::size_t at_line) {
    if (current == nullptr) return;
    if (seen != expected) {
      throw StructureError("line " + std::to_string(at_line) + ": storm " + current->id + " (header line " +
                           std::to_string(header_line) + ") declares " + std::to_string(expected) +
                           " rows, found " + std::to_string(seen));
    }
    require_increasing(*current);
    current = nullptr;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = fields_without_trailing_empty(line);

    if (current != nullptr && seen < expected) {
      if (looks_like_header(fields)) finish_current(line_no);  // throws: too few rows
      bool on_cadence = true;
      TrackPoint p = parse_hurdat2_row(line_no, fields, on_cadence);
      ++seen;
      if (on_cadence) current->points.push_back(std::move(p));
      if (seen == expected) finish_current(line_no);
      continue;
    }

    if (!looks_like_header(fields)) {
      if (fields.size() >= 8 && parse_fixed_digits(fields[0], 8)) {
        throw StructureError("line " + std::to_string(line_no) + ": data row outside any storm" +
                             (storms.empty() ? std::string{} : " (after " + storms.back().id + ")"));
      }
      throw ParseError(line_no, "expected storm header 'BASINnnYYYY, NAME, count,'");
    }
    if (fields.size() != 3) {
      throw ParseError(line_no, "malformed header: expected 3 fields, got " + std::to_string(fields.size()));
    }
    const auto count = text::parse_number<int>(fields[2]);
    if (!count || *count < 0) throw FieldError(line_no, std::string(fields[2]), "unparseable row count");

    StormTrack storm;
    storm.id = std::string(fields[0]);
    storm.name = std::string(fields[1]);
    std::transform(storm.name.begin(), storm.name.end(), storm.name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    storms.push_back(std::move(storm));
    current = &storms.back();
    expected = static_cast<std::size_t>(*count);
    seen = 0;
    header_line = line_no;
    if (expected == 0) finish_current(line_no);
  }
  finish_current(line_no + 1);
  return storms;
}

std::vector<StormTrack> parse_hurdat2_file(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_hurdat2(in);
}

std::vector<StormTrack> parse_track_csv(std::istream& in) {
  static constexpr std::array<std::string_view, 7> kColumns{"storm_id", "name",   "timestamp",  "lat",
                                                             "lon",      "wind_kt", "pressure_mb"};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) break;
  }
  if (text::trim(line).empty()) throw SchemaError("empty CSV: missing header");

  const auto header = text::split(line, ',');
  std::array<std::size_t, 7> index{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) throw SchemaError("missing column '" + std::string(kColumns[c]) + "'");
    index[c] = static_cast<std::size_t>(it - header.begin());
  }
  const auto status_it = std::find(header.begin(), header.end(), std::string_view("status"));
  const std::optional<std::size_t> status_index =
      status_it == header.end() ? std::nullopt : std::optional<std::size_t>(status_it - header.begin());

  std::vector<StormTrack> storms;
  std::unordered_map<std::string, std::size_t> by_id;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() < header.size()) {
      throw ParseError(line_no, "row has " + std::to_string(f.size()) + " fields, header has " +
                                    std::to_string(header.size()));
    }
    const std::string id(f[index[0]]);
    if (id.empty()) throw FieldError(line_no, id, "empty storm_id");

    TrackPoint p;
    const auto ts = parse_iso8601(f[index[2]]);
    if (!ts) throw FieldError(line_no, std::string(f[index[2]]), "unparseable timestamp");
    p.time = *ts;
    const auto lat = text::parse_number<double>(f[index[3]]);
    if (!lat) throw FieldError(line_no, std::string(f[index[3]]), "unparseable latitude");
    const auto lon = text::parse_number<double>(f[index[4]]);
    if (!lon) throw FieldError(line_no, std::string(f[index[4]]), "unparseable longitude");
    check_coordinate_range(line_no, f[index[3]], *lat, *lon);
    p.lat = *lat;
    p.lon = *lon;
    if (!f[index[5]].empty()) p.wind = parse_wind(line_no, f[index[5]]);
    if (!f[index[6]].empty()) p.pressure = parse_pressure(line_no, f[index[6]]);
    if (status_index) p.status = std::string(field_or_empty(f, *status_index));

    auto [it, inserted] = by_id.try_emplace(id, storms.size());
    if (inserted) {
      StormTrack s;
      s.id = id;
      s.name = std::string(f[index[1]]);
      storms.push_back(std::move(s));
    }
    auto& storm = storms[it->second];
    if (!storm.points.empty() && p.time <= storm.points.back().time) {
      throw OrderingError(id, "line " + std::to_string(line_no) + ": timestamp " + format_iso8601(p.time) +
                                  " not after " + format_iso8601(storm.points.back().time));
    }
    storm.points.push_back(std::move(p));
  }
  return storms;
}

std::vector<StormTrack> parse_track_csv_file(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_track_csv(in);
}

void write_track_csv(std::ostream& out, const std::vector<StormTrack>& tracks) {
  out << kTrackCsvHeader << ",status\n";
  for (const auto& s : tracks) {
    for (const auto& p : s.points) {
      out << s.id << ',' << s.name << ',' << format_iso8601(p.time) << ',' << text::format_double(p.lat) << ','
          << text::format_double(p.lon) << ',';
      if (p.wind) out << *p.wind;
      out << ',';
      if (p.pressure) out << *p.pressure;
      out << ',' << p.status << '\n';
    }
  }
}

FilterResult filter_valid(const std::vector<StormTrack>& tracks, YearWindow window) {
  FilterResult result;
  for (const auto& storm : tracks) {
    if (!window.contains(storm.year())) {
      ++result.outside_window;
      continue;
    }
    StormTrack kept{storm.id, storm.name, {}};
    for (const auto& p : storm.points) {
      if (p.valid()) {
        kept.points.push_back(p);
      } else {
        ++result.dropped_points;
      }
    }
    if (kept.points.size() < 2) {
      ++result.dropped_storms;
      continue;
    }
    result.tracks.push_back(std::move(kept));
  }
  return result;
}

TrackStats track_stats(const std::vector<StormTrack>& tracks) {
  if (tracks.empty()) throw StatisticsError("track_stats: no tracks");
  TrackStats st;
  std::vector<double> counts;
  for (const auto& s : tracks) {
    double d = 0.0;
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      d += haversine_distance({s.points[i - 1].lat, s.points[i - 1].lon}, {s.points[i].lat, s.points[i].lon});
    }
    st.point_counts.push_back(s.points.size());
    st.distances_km.push_back(d);
    st.total_points += s.points.size();
    counts.push_back(static_cast<double>(s.points.size()));
  }
  st.median_points = median(counts);
  const auto [mn, mx] = std::minmax_element(st.distances_km.begin(), st.distances_km.end());
  st.min_distance_index = static_cast<std::size_t>(mn - st.distances_km.begin());
  st.max_distance_index = static_cast<std::size_t>(mx - st.distances_km.begin());
  try {
    st.points_distance_pearson = pearson_r(counts, st.distances_km);
  } catch (const StatisticsError&) {
    st.points_distance_pearson = std::numeric_limits<double>::quiet_NaN();
  }
  return st;
}

}  // namespace gridtrack
