#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vmdload/errors.hpp"

namespace vmdload {

inline constexpr int kStepsPerDay = 48;
inline constexpr std::int64_t kBucketSeconds = 1800;
inline constexpr std::int64_t kDaySeconds = 86400;
inline constexpr int kWindowSpan = 2 * kStepsPerDay;
inline constexpr int kInputChannels = 3;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raw timestamped power series at source granularity.
struct LoadProfile {
  std::string household_id;
  std::vector<std::int64_t> timestamps;  // epoch seconds, strictly increasing
  std::vector<double> power_w;
  double source_period_s = 0.0;

  std::size_t size() const { return timestamps.size(); }
};

/// 30-minute bucket means over whole days. `gap_mask[i]` marks buckets that
/// must not be used: no source samples, or part of a partially covered
/// first/last day. Values of masked buckets that still had samples keep
/// their mean; empty buckets hold 0.
struct ResampledProfile {
  std::string household_id;
  std::int64_t start_time = 0;  // midnight-aligned epoch seconds
  Eigen::VectorXd power_w_30min;
  std::vector<bool> gap_mask;
  std::vector<int> sample_count;

  Eigen::Index size() const { return power_w_30min.size(); }
  std::int64_t bucket_time(Eigen::Index i) const { return start_time + i * kBucketSeconds; }
};

/// N instances of 3x48 input (load, hour-of-day, day-of-week) with 48-step targets.
/// `inputs` is N x 144 row-major: [load(48) | hour(48) | day(48)].
struct WindowedDataset {
  RowMatrix inputs;
  RowMatrix targets;
  std::vector<std::int64_t> window_start_times;

  Eigen::Index size() const { return inputs.rows(); }

  auto load(Eigen::Index i) { return inputs.row(i).segment(0, kStepsPerDay); }
  auto load(Eigen::Index i) const { return inputs.row(i).segment(0, kStepsPerDay); }
  auto hour(Eigen::Index i) const { return inputs.row(i).segment(kStepsPerDay, kStepsPerDay); }
  auto day(Eigen::Index i) const { return inputs.row(i).segment(2 * kStepsPerDay, kStepsPerDay); }

  /// Rows [first, first+count) as a new dataset.
  WindowedDataset slice(Eigen::Index first, Eigen::Index count) const;
};

struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::string power_column = "power_w";
  char delimiter = ',';
};

LoadProfile ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {},
                       std::string household_id = {});

/// Parses epoch seconds or ISO-8601 ("YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z]"), interpreted as UTC.
std::int64_t parse_timestamp(const std::string& text);

ResampledProfile resample_30min(const LoadProfile& profile);

/// Hour of day (0-23) and day of week (Monday = 0) of an epoch timestamp.
int hour_of_day(std::int64_t t);
int day_of_week(std::int64_t t);

WindowedDataset build_windows(const ResampledProfile& resampled);

std::pair<WindowedDataset, WindowedDataset> chrono_split(const WindowedDataset& dataset,
                                                         double train_fraction);

struct StandardizationParams {
  double mean = 0.0;
  double std = 1.0;
  bool degenerate = false;  // std was zero and replaced by 1
};

enum class Direction { forward, inverse };

/// Two-pass population mean/std; a zero std is replaced by 1 and flagged.
StandardizationParams fit_standardization(const Eigen::Ref<const Eigen::ArrayXd>& values);

template <typename Derived>
auto standardize(const Eigen::ArrayBase<Derived>& data, const StandardizationParams& params,
                 Direction direction) {
  using Scalar = typename Derived::Scalar;
  if (!(params.std > 0.0)) throw NumericalError("standardize: std must be positive");
  const Scalar mean = static_cast<Scalar>(params.mean);
  const Scalar scale = static_cast<Scalar>(params.std);
  return direction == Direction::forward ? ((data - mean) / scale).eval()
                                         : (data * scale + mean).eval();
}

/// Per-channel standardization of a dataset: the load channel and the targets share
/// `load`; the hour and day channels use `hour` and `day`.
struct DatasetStandardization {
  StandardizationParams load;
  StandardizationParams hour;
  StandardizationParams day;
};

DatasetStandardization fit_dataset_standardization(const WindowedDataset& train);
WindowedDataset standardize_dataset(const WindowedDataset& data, const DatasetStandardization& params,
                                    Direction direction);

void save_windowed(const std::filesystem::path& path, const WindowedDataset& dataset);
WindowedDataset load_windowed(const std::filesystem::path& path);

}  // namespace vmdload
