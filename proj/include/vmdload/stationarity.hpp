#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmdload/load_data.hpp"

namespace vmdload {

enum class StationarityTest { adf, kpss };
enum class AdfRegression { none, constant, trend };
enum class KpssRegression { level, trend };
enum class Verdict { reject, fail_to_reject };

std::string to_string(StationarityTest test);
std::string to_string(Verdict verdict);

struct StationarityReport {
  StationarityTest test = StationarityTest::adf;
  double statistic = 0.0;
  double p_value = 1.0;
  // Critical values at the 1%, 2.5%, 5% and 10% levels.
  std::array<double, 4> critical_values{};
  int lags_used = 0;
  int nobs = 0;
  Verdict verdict = Verdict::fail_to_reject;  // at 1%

  double critical_value_1pct() const { return critical_values[0]; }
};

/// Augmented Dickey-Fuller regression with a fixed lag count; defaults to the Schwert rule
/// floor(12 (n/100)^(1/4)). Null hypothesis: unit root.
StationarityReport adf_test(const Eigen::Ref<const Eigen::VectorXd>& series, std::optional<int> max_lag = std::nullopt,
                            AdfRegression regression = AdfRegression::constant);

/// KPSS with a Bartlett long-run variance. Without a bandwidth the lag count is chosen by
/// the Hobijn-Franses-Ooms automatic rule. Null hypothesis: (trend) stationarity.
StationarityReport kpss_test(const Eigen::Ref<const Eigen::VectorXd>& series,
                             std::optional<int> bandwidth = std::nullopt,
                             KpssRegression regression = KpssRegression::level);

/// p-value by piecewise-linear interpolation of the normal quantile of the level against
/// the 1/2.5/5/10% critical values, extrapolated past the ends and clamped to [1e-4, 0.9999].
double interpolate_p_value(double statistic, const std::array<double, 4>& critical_values);

struct BatchStationarity {
  std::vector<StationarityReport> adf;  // one per series, IMFs then residue
  std::vector<StationarityReport> kpss;
  double mean_adf_statistic = 0.0;
  double mean_adf_critical = 0.0;
  double mean_kpss_statistic = 0.0;
  double mean_kpss_critical = 0.0;
};

/// Load channel of consecutive non-overlapping windows (window starts one day apart)
/// joined into one series.
Eigen::VectorXd stitch_series(const WindowedDataset& dataset);

BatchStationarity batch_stationarity(const std::vector<Eigen::VectorXd>& series, int workers = 1);
BatchStationarity batch_stationarity(const std::vector<WindowedDataset>& datasets, int workers = 1);

}  // namespace vmdload
