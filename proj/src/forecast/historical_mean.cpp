#include "vmdload/forecast/historical_mean.hpp"

#include <algorithm>
#include <string>

#include "vmdload/errors.hpp"

namespace vmdload::forecast {

int same_day_type_offset(int weekday) {
  switch (weekday) {
    case 0: return 4;  // Monday
    case 5: return 7;  // Saturday
    case 6: return 7;  // Sunday, not covered by the day-type table
    default: return 1;
  }
}

namespace {

bool day_complete(const ResampledProfile& p, Eigen::Index day) {
  if (day < 0 || (day + 1) * kStepsPerDay > p.size()) return false;
  for (Eigen::Index i = day * kStepsPerDay; i < (day + 1) * kStepsPerDay; ++i) {
    if (p.gap_mask[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

Eigen::Index day_index(const ResampledProfile& p, std::int64_t day_start) {
  const auto offset = day_start - p.start_time;
  if (offset % kDaySeconds != 0) throw DataError("historical mean: target day is not midnight aligned");
  return static_cast<Eigen::Index>(offset / kDaySeconds);
}

bool history_complete(const ResampledProfile& p, Eigen::Index day) {
  if (day < kHistoryDays) return false;
  for (Eigen::Index back = 1; back <= kHistoryDays; ++back) {
    if (!day_complete(p, day - back)) return false;
  }
  return true;
}

}  // namespace

Eigen::VectorXd historical_mean_forecast(const ResampledProfile& history, std::int64_t target_day_start) {
  const auto day = day_index(history, target_day_start);
  if (day < kHistoryDays) {
    throw DataError("historical mean: " + std::to_string(day) + " days of history before target, need " +
                    std::to_string(kHistoryDays));
  }
  if (day * kStepsPerDay > history.size() || !history_complete(history, day)) {
    throw DataError("historical mean: history before " + std::to_string(target_day_start) + " is incomplete");
  }
  auto block = [&](Eigen::Index back) { return history.power_w_30min.segment((day - back) * kStepsPerDay, kStepsPerDay); };

  const Eigen::VectorXd f1 = block(same_day_type_offset(day_of_week(target_day_start)));
  const Eigen::VectorXd f2 = (block(7) + block(14) + block(21)) / 3.0;
  Eigen::VectorXd f3 = Eigen::VectorXd::Zero(kStepsPerDay);
  for (Eigen::Index back = 1; back <= 7; ++back) f3 += block(back);
  f3 /= 7.0;
  const Eigen::VectorXd f4 = Eigen::VectorXd::Constant(kStepsPerDay, block(1).mean());
  return (f1 + f2 + f3 + f4) / 4.0;
}

HistoricalMeanRun evaluate_historical_mean(const ResampledProfile& history, std::int64_t first_target_time) {
  HistoricalMeanRun run;
  const Eigen::Index days = history.size() / kStepsPerDay;
  // First midnight at or after first_target_time.
  const auto rel = std::max<std::int64_t>(0, first_target_time - history.start_time);
  const Eigen::Index first_day = static_cast<Eigen::Index>((rel + kDaySeconds - 1) / kDaySeconds);

  std::vector<Eigen::VectorXd> forecasts, actuals;
  for (Eigen::Index day = first_day; day < days; ++day) {
    if (!day_complete(history, day) || !history_complete(history, day)) {
      ++run.skipped_days;
      continue;
    }
    const auto start = history.start_time + day * kDaySeconds;
    forecasts.push_back(historical_mean_forecast(history, start));
    actuals.push_back(history.power_w_30min.segment(day * kStepsPerDay, kStepsPerDay));
    run.day_starts.push_back(start);
  }
  const auto n = static_cast<Eigen::Index>(forecasts.size());
  run.actual.resize(n, kStepsPerDay);
  run.forecast.resize(n, kStepsPerDay);
  for (Eigen::Index i = 0; i < n; ++i) {
    run.actual.row(i) = actuals[static_cast<std::size_t>(i)].transpose();
    run.forecast.row(i) = forecasts[static_cast<std::size_t>(i)].transpose();
  }
  return run;
}

}  // namespace vmdload::forecast
