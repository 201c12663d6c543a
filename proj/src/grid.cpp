#include "gridtrack/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "gridtrack/error.hpp"
#include "text.hpp"

namespace gridtrack {

namespace {

constexpr const char* kGridMagic = "gridspec v1";

// Tolerates representation error when a coordinate sits on a cell boundary.
constexpr double kBoundaryEps = 1e-9;

int cell_index(double value, double origin, double cell_size, int extent) {
  int idx = static_cast<int>(std::floor((value - origin) / cell_size + kBoundaryEps));
  return std::clamp(idx, 0, extent - 1);
}

int extent(double lo, double hi, double cell_size) {
  return std::max(1, static_cast<int>(std::lround((hi - lo) / cell_size)));
}

}  // namespace

GridSpec::GridSpec(double lat_min, double lat_max, double lon_min, double lon_max, double cell_size,
                   std::vector<CellIndex> occupied)
    : lat_min_(lat_min),
      lat_max_(lat_max),
      lon_min_(lon_min),
      lon_max_(lon_max),
      cell_size_(cell_size),
      occupied_(std::move(occupied)) {
  if (!(cell_size > 0.0)) throw ConfigError("grid cell size must be positive");
  if (!(lat_max > lat_min) || !(lon_max > lon_min)) throw ConfigError("grid bounding box is empty");
  rows_ = extent(lat_min, lat_max, cell_size);
  cols_ = extent(lon_min, lon_max, cell_size);
  if (std::abs(lat_min + rows_ * cell_size - lat_max) > 1e-6 * cell_size ||
      std::abs(lon_min + cols_ * cell_size - lon_max) > 1e-6 * cell_size) {
    throw ConfigError("grid bounding box is not a whole number of cells");
  }
  std::sort(occupied_.begin(), occupied_.end());
  occupied_.erase(std::unique(occupied_.begin(), occupied_.end()), occupied_.end());
  for (const auto& c : occupied_) {
    if (!in_extents(c)) throw ConfigError("occupied cell outside grid extents");
  }
}

int GridSpec::id_of(CellIndex cell) const noexcept {
  const auto it = std::lower_bound(occupied_.begin(), occupied_.end(), cell);
  if (it == occupied_.end() || *it != cell) return kUnoccupied;
  return static_cast<int>(it - occupied_.begin());
}

bool GridSpec::contains(GeoPoint p) const noexcept {
  return p.lat >= lat_min_ && p.lat <= lat_max_ && p.lon >= lon_min_ && p.lon <= lon_max_;
}

bool GridSpec::in_extents(CellIndex cell) const noexcept {
  return cell.row >= 0 && cell.row < rows_ && cell.col >= 0 && cell.col < cols_;
}

double GridSpec::row_coord(double lat) const noexcept { return (lat - lat_min_) / cell_size_ - 0.5; }
double GridSpec::col_coord(double lon) const noexcept { return (lon - lon_min_) / cell_size_ - 0.5; }

double GridSpec::half_diagonal_km(double lat) const noexcept {
  const double lower = std::floor((lat - lat_min_) / cell_size_ + kBoundaryEps) * cell_size_ + lat_min_;
  const double upper = lower + cell_size_;
  const GeoPoint center{(lower + upper) / 2.0, 0.0};
  return std::max(haversine_distance(center, {lower, cell_size_ / 2.0}),
                  haversine_distance(center, {upper, cell_size_ / 2.0}));
}

GridSpec build_grid(const std::vector<StormTrack>& tracks, double cell_size) {
  return build_grid(tracks, tracks, cell_size);
}

GridSpec build_grid(const std::vector<StormTrack>& box_tracks, const std::vector<StormTrack>& occupancy_tracks,
                    double cell_size) {
  if (!(cell_size > 0.0)) throw ConfigError("cell size must be positive");
  double lat_lo = std::numeric_limits<double>::infinity();
  double lat_hi = -lat_lo;
  double lon_lo = lat_lo;
  double lon_hi = -lat_lo;
  for (const auto* set : {&box_tracks, &occupancy_tracks}) {
    for (const auto& s : *set) {
      for (const auto& p : s.points) {
        lat_lo = std::min(lat_lo, p.lat);
        lat_hi = std::max(lat_hi, p.lat);
        lon_lo = std::min(lon_lo, p.lon);
        lon_hi = std::max(lon_hi, p.lon);
      }
    }
  }
  if (!std::isfinite(lat_lo)) throw ConfigError("build_grid: no points");

  const auto snap_down = [&](double v) { return std::floor(v / cell_size + kBoundaryEps) * cell_size; };
  const auto snap_up = [&](double v) { return std::ceil(v / cell_size - kBoundaryEps) * cell_size; };
  const double lat_min = snap_down(lat_lo);
  const double lon_min = snap_down(lon_lo);
  double lat_max = snap_up(lat_hi);
  double lon_max = snap_up(lon_hi);
  if (lat_max <= lat_min) lat_max = lat_min + cell_size;
  if (lon_max <= lon_min) lon_max = lon_min + cell_size;

  GridSpec box(lat_min, lat_max, lon_min, lon_max, cell_size, {});
  std::set<CellIndex> occupied;
  for (const auto& s : occupancy_tracks) {
    for (const auto& p : s.points) {
      const auto cell = encode_cell(box, {p.lat, p.lon});
      occupied.insert({cell.row, cell.col});
    }
  }
  return GridSpec(lat_min, lat_max, lon_min, lon_max, cell_size, {occupied.begin(), occupied.end()});
}

GridCell encode_cell(const GridSpec& spec, GeoPoint p) {
  if (!spec.contains(p)) {
    throw OutOfBoundsError("point (" + text::format_double(p.lat) + ", " + text::format_double(p.lon) +
                           ") outside grid box");
  }
  GridCell cell;
  cell.row = cell_index(p.lat, spec.lat_min(), spec.cell_size(), spec.rows());
  cell.col = cell_index(p.lon, spec.lon_min(), spec.cell_size(), spec.cols());
  cell.id = spec.id_of({cell.row, cell.col});
  cell.center = decode_cell(spec, CellIndex{cell.row, cell.col});
  return cell;
}

GeoPoint decode_cell(const GridSpec& spec, CellIndex cell) {
  if (!spec.in_extents(cell)) {
    throw OutOfBoundsError("cell (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                           ") outside grid extents");
  }
  return {spec.lat_min() + (cell.row + 0.5) * spec.cell_size(), spec.lon_min() + (cell.col + 0.5) * spec.cell_size()};
}

std::pair<CellIndex, bool> clamp_cell(const GridSpec& spec, CellIndex cell) noexcept {
  const CellIndex clamped{std::clamp(cell.row, 0, spec.rows() - 1), std::clamp(cell.col, 0, spec.cols() - 1)};
  return {clamped, clamped != cell};
}

void save_grid(std::ostream& out, const GridSpec& spec) {
  out << kGridMagic << ' ' << text::format_double(spec.lat_min()) << ' ' << text::format_double(spec.lat_max())
      << ' ' << text::format_double(spec.lon_min()) << ' ' << text::format_double(spec.lon_max()) << ' '
      << text::format_double(spec.cell_size()) << ' ' << spec.occupied_count() << '\n';
  int id = 0;
  for (const auto& c : spec.occupied()) out << id++ << ',' << c.row << ',' << c.col << '\n';
}

GridSpec load_grid(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty grid file");
  std::istringstream header(line);
  std::string magic, version, lat_min, lat_max, lon_min, lon_max, cell;
  std::size_t count = 0;
  header >> magic >> version >> lat_min >> lat_max >> lon_min >> lon_max >> cell >> count;
  if (!header || magic + " " + version != kGridMagic) throw ParseError(1, "not a gridspec v1 header");
  const auto num = [](const std::string& s) {
    auto v = text::parse_number<double>(s);
    if (!v) throw FieldError(1, s, "bad grid header number");
    return *v;
  };
  std::vector<CellIndex> occupied;
  occupied.reserve(count);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 3) throw ParseError(line_no, "expected id,row,col");
    const auto id = text::parse_number<std::size_t>(f[0]);
    const auto row = text::parse_number<int>(f[1]);
    const auto col = text::parse_number<int>(f[2]);
    if (!id || !row || !col || *id != occupied.size()) throw ParseError(line_no, "bad cell line");
    occupied.push_back({*row, *col});
  }
  if (occupied.size() != count) throw StructureError("grid file declares " + std::to_string(count) + " cells");
  GridSpec spec(num(lat_min), num(lat_max), num(lon_min), num(lon_max), num(cell), occupied);
  if (spec.occupied() != occupied) throw StructureError("grid cells not in row-major order");
  return spec;
}

void save_grid_file(const std::string& path, const GridSpec& spec) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  save_grid(out, spec);
  if (!out) throw IoError("write failed: " + path);
}

GridSpec load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return load_grid(in);
}

}  // namespace gridtrack
