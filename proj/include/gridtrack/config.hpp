#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "gridtrack/forecast.hpp"
#include "gridtrack/track_ingest.hpp"

namespace gridtrack {

struct RunConfig {
  std::string data;
  std::string format = "hurdat2";
  int year_first = 1920;
  int year_last = 2012;
  double cell_size = 1.0;
  int epochs = 50;
  int patience = 5;
  double lr = 0.001;
  double dropout = 0.1;
  int hidden = 32;
  double clip_norm = 1.0;  // 0 disables clipping
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> split_seed;  // unset: follows seed
  std::string features = "wind,lat,lon,bearing,distance,grid_row,grid_col";
  bool bearing_sincos = false;
  int layers = kDefaultLayers;
  bool allow_layer_override = false;
  int warmup = 4;
  int horizon = 120;
  std::string out = "run";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  [[nodiscard]] std::uint64_t effective_split_seed() const noexcept { return split_seed.value_or(seed); }
  [[nodiscard]] YearWindow year_window() const noexcept { return {year_first, year_last}; }
  [[nodiscard]] TrainingConfig training() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Applies `key=value` lines onto `base`. Blank lines and `#` comments are skipped.
[[nodiscard]] RunConfig load_config(std::istream& in, RunConfig base = {});
[[nodiscard]] RunConfig load_config_file(const std::string& path, RunConfig base = {});
void save_config(std::ostream& out, const RunConfig& cfg);
void save_config_file(const std::string& path, const RunConfig& cfg);

}  // namespace gridtrack
