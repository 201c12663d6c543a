#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "gridtrack/geo.hpp"
#include "gridtrack/track.hpp"

namespace gridtrack {

inline constexpr int kUnoccupied = -1;

struct CellIndex {
  int row = 0;  // 0 = southernmost
  int col = 0;  // 0 = westernmost
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

struct GridCell {
  int id = kUnoccupied;
  int row = 0;
  int col = 0;
  GeoPoint center;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Regular lat/lon grid over a bounding box. Only occupied cells get ids,
/// numbered in row-major order.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(double lat_min, double lat_max, double lon_min, double lon_max, double cell_size,
           std::vector<CellIndex> occupied);

  [[nodiscard]] double lat_min() const noexcept { return lat_min_; }
  [[nodiscard]] double lat_max() const noexcept { return lat_max_; }
  [[nodiscard]] double lon_min() const noexcept { return lon_min_; }
  [[nodiscard]] double lon_max() const noexcept { return lon_max_; }
  [[nodiscard]] double cell_size() const noexcept { return cell_size_; }
  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] const std::vector<CellIndex>& occupied() const noexcept { return occupied_; }
  [[nodiscard]] int occupied_count() const noexcept { return static_cast<int>(occupied_.size()); }

  /// Id of an occupied cell, or kUnoccupied.
  [[nodiscard]] int id_of(CellIndex cell) const noexcept;
  [[nodiscard]] bool contains(GeoPoint p) const noexcept;
  [[nodiscard]] bool in_extents(CellIndex cell) const noexcept;

  /// Continuous grid coordinates: cell centres sit on integer values.
  [[nodiscard]] double row_coord(double lat) const noexcept;
  [[nodiscard]] double col_coord(double lon) const noexcept;

  /// Half the cell diagonal at latitude `lat`, in km.
  [[nodiscard]] double half_diagonal_km(double lat) const noexcept;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  double lat_min_ = 0.0;
  double lat_max_ = 0.0;
  double lon_min_ = 0.0;
  double lon_max_ = 0.0;
  double cell_size_ = 1.0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<CellIndex> occupied_;
};

/// Box and occupancy from the same tracks.
[[nodiscard]] GridSpec build_grid(const std::vector<StormTrack>& tracks, double cell_size);

/// Box covers `box_tracks`; occupancy from `occupancy_tracks` only.
[[nodiscard]] GridSpec build_grid(const std::vector<StormTrack>& box_tracks,
                                  const std::vector<StormTrack>& occupancy_tracks, double cell_size);

/// Lower-inclusive, upper-exclusive; the top and right box edges belong to
/// the last row/column. Throws OutOfBoundsError outside the box.
[[nodiscard]] GridCell encode_cell(const GridSpec& spec, GeoPoint p);

/// Cell centre. Throws OutOfBoundsError when row/col lie outside the extents.
[[nodiscard]] GeoPoint decode_cell(const GridSpec& spec, CellIndex cell);
[[nodiscard]] inline GeoPoint decode_cell(const GridSpec& spec, const GridCell& cell) {
  return decode_cell(spec, CellIndex{cell.row, cell.col});
}

/// Nearest in-extent cell; second is true when clamping moved the cell.
[[nodiscard]] std::pair<CellIndex, bool> clamp_cell(const GridSpec& spec, CellIndex cell) noexcept;

void save_grid(std::ostream& out, const GridSpec& spec);
[[nodiscard]] GridSpec load_grid(std::istream& in);
void save_grid_file(const std::string& path, const GridSpec& spec);
[[nodiscard]] GridSpec load_grid_file(const std::string& path);

}  // namespace gridtrack
