#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridtrack/features.hpp"
#include "gridtrack/grid.hpp"
#include "gridtrack/lstm.hpp"
#include "gridtrack/track.hpp"

namespace gridtrack {

inline constexpr int kStepHours = 6;
inline constexpr int kMaxHorizonHours = 120;

// ---------------------------------------------------------------------------
// Splits

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> test_ids;
  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

/// Seeded shuffle, then 15% test and 10% of the remainder for validation
/// (both rounded half-to-even).
[[nodiscard]] SplitPlan make_split(const std::vector<StormTrack>& storms, std::uint64_t seed);

void save_split(std::ostream& out, const SplitPlan& plan);
[[nodiscard]] SplitPlan load_split(std::istream& in);

/// Storms whose id is in `ids`, in `ids` order.
[[nodiscard]] std::vector<StormTrack> select_storms(const std::vector<StormTrack>& storms,
                                                    const std::vector<std::string>& ids);

// ---------------------------------------------------------------------------
// Model

/// Divisors that map per-6h grid displacements into [-1, 1].
struct DisplacementScale {
  double row = 1.0;
  double col = 1.0;
  friend bool operator==(const DisplacementScale&, const DisplacementScale&) = default;
};

struct ForecastModel {
  LstmNetwork net;
  std::vector<Feature> features = default_features();
  DisplacementScale scale;
  std::string grid_ref = "grid.txt";
  std::string normalization_ref = "normalization.csv";
};

void save_checkpoint(std::ostream& out, const ForecastModel& model);
[[nodiscard]] ForecastModel load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const ForecastModel& model);
[[nodiscard]] ForecastModel load_checkpoint_file(const std::string& path);

/// Largest per-axis per-6h displacement (grid units) over the tracks.
/// Axes without motion get 1.
[[nodiscard]] DisplacementScale displacement_scale(const std::vector<StormTrack>& tracks, const GridSpec& spec);

/// Network-ready sequence: rows 0..T-2 of the per-storm normalized features,
/// and the scaled displacement to the following fix as targets.
struct PreparedStorm {
  std::string id;
  Matrix inputs;
  Matrix targets;
  std::vector<double> mean;
  std::vector<double> stddev;
};

[[nodiscard]] PreparedStorm prepare_storm(const StormTrack& storm, const GridSpec& spec,
                                          const std::vector<Feature>& features, DisplacementScale scale);

void write_normalization_csv(std::ostream& out, const std::vector<PreparedStorm>& storms,
                             const std::vector<Feature>& features);

// ---------------------------------------------------------------------------
// Training

struct TrainingConfig {
  int epochs = 50;
  int patience = 5;
  double lr = 0.001;
  double dropout = 0.1;
  int hidden = 32;
  std::optional<double> clip_norm = 1.0;
  std::uint64_t seed = 0;
  std::vector<Feature> features = default_features();
  int layers = kDefaultLayers;
  bool allow_layer_override = false;
};

struct EpochLog {
  int epoch = 0;
  double train_mse = 0.0;  // inference-mode MSE over the training storms
  double val_mse = 0.0;    // inference-mode MSE over the validation storms
  double seconds = 0.0;
};

struct TrainingResult {
  ForecastModel model;  // parameters from the best validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::vector<PreparedStorm> prepared;  // training + validation storms
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Per-storm SGD with full-sequence BPTT and early stopping on validation
/// MSE (training MSE when the validation set is empty).
[[nodiscard]] TrainingResult train(const std::vector<StormTrack>& storms, const GridSpec& spec,
                                   const SplitPlan& plan, const TrainingConfig& cfg,
                                   const EpochCallback& on_epoch = {});

/// Pooled squared error and element count of one-step predictions.
struct TeacherForcedError {
  double sum_sq = 0.0;
  std::size_t elements = 0;
  [[nodiscard]] double mse() const noexcept { return elements ? sum_sq / static_cast<double>(elements) : 0.0; }
};

[[nodiscard]] TeacherForcedError teacher_forced_error(const ForecastModel& model, const PreparedStorm& storm);
[[nodiscard]] TeacherForcedError teacher_forced_error(const ForecastModel& model,
                                                      const std::vector<PreparedStorm>& storms);

// ---------------------------------------------------------------------------
// Rollout

struct ForecastTrack {
  std::string storm_id;
  std::size_t origin = 0;  // index of the last observed fix
  Timestamp origin_time{};
  GeoPoint origin_point;
  CellIndex origin_cell;
  int horizon_hours = 0;
  std::vector<CellIndex> cells;
  std::vector<GeoPoint> points;
  std::vector<bool> clamped;
};

/// Rounds per-step displacements to whole cells, carrying the remainder.
class CellWalker {
 public:
  CellWalker(const GridSpec& spec, CellIndex start) : spec_(&spec), cell_(start) {}
  /// Returns the new cell and whether it had to be clamped into the grid.
  std::pair<CellIndex, bool> advance(double d_row, double d_col);
  [[nodiscard]] CellIndex cell() const noexcept { return cell_; }

 private:
  const GridSpec* spec_;
  CellIndex cell_;
  double carry_row_ = 0.0;
  double carry_col_ = 0.0;
};

/// Feeds the first `warmup_steps` fixes, then predicts horizon/6 steps,
/// feeding each decoded cell back as the next input. Wind is held at the
/// last observed value; inputs use the warmup normalization statistics.
[[nodiscard]] ForecastTrack rollout(const ForecastModel& model, const GridSpec& spec, const StormTrack& storm,
                                    std::size_t warmup_steps, int horizon_hours);

void write_forecast_csv(std::ostream& out, const std::vector<ForecastTrack>& forecasts);

/// FeatureCollection with an "observed" and a "predicted" LineString.
void write_forecast_geojson(std::ostream& out, const ForecastTrack& forecast, const StormTrack& truth);

}  // namespace gridtrack
