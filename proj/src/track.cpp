#include "gridtrack/track.hpp"

#include <cstdio>

#include "text.hpp"

namespace gridtrack {

namespace {
constexpr int kWindMin = 0;
constexpr int kPressureMin = 800;
constexpr int kPressureMax = 1100;
}  // namespace

bool TrackPoint::valid() const noexcept {
  return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0 && wind.has_value() &&
         *wind >= kWindMin && pressure.has_value() && *pressure >= kPressureMin && *pressure <= kPressureMax;
}

int StormTrack::year() const {
  if (points.empty()) {
    // HURDAT2 ids end in the season year.
    if (id.size() >= 4) {
      if (auto y = text::parse_number<int>(std::string_view(id).substr(id.size() - 4))) return *y;
    }
    return 0;
  }
  return year_of(points.front().time);
}

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute) {
  using namespace std::chrono;
  return sys_days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}} + hours{hour} +
         minutes{minute};
}

int year_of(Timestamp t) {
  using namespace std::chrono;
  return static_cast<int>(year_month_day{floor<days>(t)}.year());
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  s = text::trim(s);
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  // YYYY-MM-DDTHH:MM[:SS]
  if (s.size() != 16 && s.size() != 19) return std::nullopt;
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') return std::nullopt;
  const auto y = text::parse_number<int>(s.substr(0, 4));
  const auto mo = text::parse_number<unsigned>(s.substr(5, 2));
  const auto d = text::parse_number<unsigned>(s.substr(8, 2));
  const auto h = text::parse_number<int>(s.substr(11, 2));
  const auto mi = text::parse_number<int>(s.substr(14, 2));
  int sec = 0;
  if (s.size() == 19) {
    if (s[16] != ':') return std::nullopt;
    const auto ss = text::parse_number<int>(s.substr(17, 2));
    if (!ss || *ss < 0 || *ss > 59) return std::nullopt;
    sec = *ss;
  }
  if (!y || !mo || !d || !h || !mi) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*mo}, std::chrono::day{*d}};
  if (!ymd.ok() || *h < 0 || *h > 23 || *mi < 0 || *mi > 59) return std::nullopt;
  return make_timestamp(*y, *mo, *d, *h, *mi) + std::chrono::seconds{sec};
}

}  // namespace gridtrack
