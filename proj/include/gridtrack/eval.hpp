#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gridtrack/forecast.hpp"

namespace gridtrack {

/// Rows scaled by (rows - 1) and columns by (cols - 1); the mean over steps of
/// the average of the two absolute scaled differences.
[[nodiscard]] double scaled_grid_mae(const std::vector<CellIndex>& predicted, const std::vector<CellIndex>& truth,
                                     const GridSpec& spec);

/// Great-circle error (km) per lead hour, for the leads the truth covers
/// contiguously from the origin.
[[nodiscard]] std::map<int, double> track_error_by_lead(const ForecastTrack& forecast, const StormTrack& truth);

/// Repeats the last observed per-6h grid displacement (fractional, carried
/// like the rollout) from fix `origin`. Needs origin >= 1.
[[nodiscard]] ForecastTrack persistence_forecast(const GridSpec& spec, const StormTrack& storm, std::size_t origin,
                                                 int horizon_hours);

struct MetricsRecord {
  std::string storm_id = "ALL";
  double tf_mse = 0.0;
  double tf_rmse = 0.0;
  std::size_t tf_elements = 0;
  double scaled_mae = 0.0;
  std::size_t mae_steps = 0;
  std::map<int, double> lead_error_km;  // mean over forecasts
  std::map<int, std::size_t> lead_counts;
};

struct StormEvaluation {
  MetricsRecord model;
  MetricsRecord baseline;
  ForecastTrack showcase;  // model rollout from the configured warmup
};

/// Teacher-forced error on the storm, plus model and persistence rollouts
/// from every origin with at least `warmup` fixes of history.
[[nodiscard]] StormEvaluation evaluate_storm(const ForecastModel& model, const GridSpec& spec,
                                             const StormTrack& storm, std::size_t warmup, int horizon_hours);

/// Pools per-storm records into one record (counts-weighted).
[[nodiscard]] MetricsRecord pool_metrics(const std::vector<MetricsRecord>& records, const std::string& id = "ALL");

/// Published per-storm MAE constants used in the comparison table.
struct PublishedMae {
  const char* storm;
  double grid_rnn;
  double sparse_rnn_lat;
  double sparse_rnn_lon;
  double sparse_rnn_avg;
};
[[nodiscard]] const std::vector<PublishedMae>& published_mae();

/// User-supplied external track errors (`lead_hours,source,error_km`).
struct ExternalError {
  int lead_hours = 0;
  std::string source;
  double error_km = 0.0;
};
[[nodiscard]] std::vector<ExternalError> load_external_errors(const std::string& path);

struct Showcase {
  ForecastTrack forecast;
  StormTrack truth;
};

struct ReportFiles {
  std::filesystem::path metrics;
  std::filesystem::path baseline_metrics;
  std::filesystem::path comparison;
  std::vector<std::filesystem::path> geojson;
};

/// Writes `<run_id>_metrics.csv`, `<run_id>_baseline_metrics.csv`,
/// `<run_id>_comparison.csv` and one `<run_id>_<storm>.geojson` per showcase.
ReportFiles emit_report(const std::vector<MetricsRecord>& metrics, const std::vector<MetricsRecord>& baseline,
                        const std::vector<Showcase>& showcases, const std::filesystem::path& out_dir,
                        const std::string& run_id, const std::vector<ExternalError>& external = {});

}  // namespace gridtrack
