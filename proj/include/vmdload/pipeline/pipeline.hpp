#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vmdload/metrics.hpp"
#include "vmdload/pipeline/config.hpp"
#include "vmdload/stationarity.hpp"

namespace vmdload::pipeline {

/// Ingested, resampled, windowed and split data of one household.
struct HouseholdData {
  std::string household;
  ResampledProfile resampled;
  WindowedDataset train;
  WindowedDataset test;
};

HouseholdData prepare_household(const ExperimentConfig& config, const std::string& household);

/// Per-component datasets: K+1 (modes, then residue) or the raw data alone when k is none.
struct ComponentData {
  std::vector<WindowedDataset> train;
  std::vector<WindowedDataset> test;
  std::vector<double> energy_shares;  // over training inputs, residue last
};

ComponentData decompose_household(const ExperimentConfig& config, const HouseholdData& data, ModeCount k);

/// Historical-mean forecasts over the day-aligned test days.
struct BaselineResult {
  MetricsReport metrics;
  int days = 0;
  int skipped_days = 0;
};

BaselineResult run_baseline(const HouseholdData& data);
BaselineResult baseline(const ExperimentConfig& config, const std::string& household);

enum class Stage { train, forecast, evaluate };

struct RunRecord {
  std::string config_hash;
  std::string household;
  std::string model = "mwdn-inception";
  ModeCount k;
  int levels = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> stage_seconds;
  MetricsReport metrics;
  std::string reference_policy = "historical mean on midnight-aligned test days";
  int reference_days = 0;
  std::vector<std::string> checkpoints;
  std::vector<int> resumed;  // component indices loaded from checkpoints
  std::vector<double> energy_shares;
  int train_windows = 0;
  int test_windows = 0;
  // One test window for overlay plots.
  std::int64_t overlay_start = 0;
  std::vector<double> overlay_actual;
  std::vector<double> overlay_forecast;

  std::string tag() const;
  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

/// Directory of one (household, K, I) cell below the output directory.
std::filesystem::path run_directory(const ExperimentConfig& config, const std::string& household, ModeCount k,
                                    int levels);

/// ingest -> resample -> window -> split -> [VMD] -> standardize -> train K+1 models ->
/// predict -> sum -> evaluate. Trained components are checkpointed under the run directory
/// and reused when the config hash matches, so an interrupted run resumes per component.
/// Stage::train stops after checkpointing, Stage::forecast after writing forecast.csv.
RunRecord run_pipeline(const ExperimentConfig& config, const HouseholdData& data, ModeCount k, int levels,
                       Stage until = Stage::evaluate);
RunRecord run_pipeline(const ExperimentConfig& config, const std::string& household, ModeCount k, int levels,
                       Stage until = Stage::evaluate);

/// Households x K list x level list; writes `<out>/sweep.csv`.
std::vector<RunRecord> sweep(const ExperimentConfig& config);

std::string metrics_csv_header();
std::string metrics_csv_row(const RunRecord& record);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);

/// bars.csv, overlay_<tag>.csv and box_<tag>.csv; returns the written paths.
std::vector<std::filesystem::path> emit_plots(const std::vector<RunRecord>& records,
                                              const std::filesystem::path& dir);

/// Rows household,decomposition,test,p_value,statistic,critical_value per component plus a mean row per test.
void write_stationarity_csv(const std::filesystem::path& path, const std::string& household, ModeCount k,
                            const BatchStationarity& result);

}  // namespace vmdload::pipeline
