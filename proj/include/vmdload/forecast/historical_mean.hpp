#pragma once

#include <cstdint>
#include <vector>

#include "vmdload/load_data.hpp"

namespace vmdload::forecast {

inline constexpr int kHistoryDays = 21;

/// Day offsets (days before the target) used by the same-day-type feature F1.
/// Tuesday..Friday take the previous day, Saturday the previous Saturday, Monday the
/// Thursday before (four days back) and Sunday the previous Sunday.
int same_day_type_offset(int weekday);

/// Mean of F1..F4 for the midnight-aligned day starting at `target_day_start`.
/// Throws DataError if the day is misaligned, out of range, or any referenced
/// history day (up to 21 days back) is masked.
Eigen::VectorXd historical_mean_forecast(const ResampledProfile& history, std::int64_t target_day_start);

struct HistoricalMeanRun {
  RowMatrix actual;    // N x 48 watts
  RowMatrix forecast;  // N x 48 watts
  std::vector<std::int64_t> day_starts;
  int skipped_days = 0;  // candidates lacking complete history or actuals
};

/// Forecasts every fully observed midnight-aligned day starting at or after
/// `first_target_time` that has 21 complete days of history.
HistoricalMeanRun evaluate_historical_mean(const ResampledProfile& history, std::int64_t first_target_time);

}  // namespace vmdload::forecast
