#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "vmdload/errors.hpp"

namespace vmdload {

/// Actual values below this magnitude (watts) are floored in MAPE denominators.
inline constexpr double kMapeFloorW = 1.0;

namespace detail {
template <typename A, typename F>
void check_same_shape(const Eigen::DenseBase<A>& actual, const Eigen::DenseBase<F>& forecast, const char* what) {
  if (actual.rows() != forecast.rows() || actual.cols() != forecast.cols()) {
    throw ShapeError(std::string(what) + ": actual is " + std::to_string(actual.rows()) + "x" +
                     std::to_string(actual.cols()) + ", forecast is " + std::to_string(forecast.rows()) + "x" +
                     std::to_string(forecast.cols()));
  }
  if (actual.size() == 0) throw ShapeError(std::string(what) + ": empty input");
}
}  // namespace detail

/// Mean of |y - f| / max(|y|, floor) over all N x H entries (a fraction, not a percentage).
template <typename A, typename F>
double mape(const Eigen::DenseBase<A>& actual, const Eigen::DenseBase<F>& forecast, double floor = kMapeFloorW) {
  detail::check_same_shape(actual, forecast, "mape");
  const auto y = actual.derived().array();
  return ((y - forecast.derived().array()).abs() / y.abs().max(floor)).mean();
}

template <typename A, typename F>
double rmse(const Eigen::DenseBase<A>& actual, const Eigen::DenseBase<F>& forecast) {
  detail::check_same_shape(actual, forecast, "rmse");
  return std::sqrt((actual.derived().array() - forecast.derived().array()).square().mean());
}

/// sqrt(sum (y - f)^2 / (N (H - 1))) / mean(y) * 100, rows are instances and columns horizons.
template <typename A, typename F>
double cv(const Eigen::DenseBase<A>& actual, const Eigen::DenseBase<F>& forecast) {
  detail::check_same_shape(actual, forecast, "cv");
  if (actual.cols() < 2) throw ShapeError("cv: needs at least two horizons");
  const double mean = actual.derived().array().mean();
  if (mean == 0.0) throw NumericalError("cv: mean of actual values is zero");
  const double sse = (actual.derived().array() - forecast.derived().array()).square().sum();
  const double divisor = static_cast<double>(actual.rows()) * static_cast<double>(actual.cols() - 1);
  return std::sqrt(sse / divisor) / mean * 100.0;
}

/// Forecast skill (1 - (model/reference)^2) * 100.
double fs(double model_rmse, double reference_rmse);

struct BoxSummary {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double whisker_low = 0.0, whisker_high = 0.0;  // most extreme values within 1.5 IQR of the quartiles
  double min = 0.0, max = 0.0;
  int outliers = 0;
  int count = 0;
};

/// Linear-interpolation quantile (the usual "type 7" definition) of unsorted values.
double quantile(std::vector<double> values, double q);
BoxSummary box_summary(std::vector<double> values);

enum class ErrorKind { absolute, signed_error };

/// One box summary per horizon (column), aggregated over instances (rows) of f - y or |f - y|.
std::vector<BoxSummary> horizon_error_profile(const Eigen::Ref<const Eigen::MatrixXd>& actual,
                                              const Eigen::Ref<const Eigen::MatrixXd>& forecast,
                                              ErrorKind kind = ErrorKind::absolute);

struct MetricsReport {
  double mape = 0.0;          // fraction
  double mape_percent = 0.0;  // mape * 100
  double rmse = 0.0;
  double cv = 0.0;
  std::optional<double> fs;   // absent without a reference
  std::optional<double> reference_rmse;
  double mape_floor_w = kMapeFloorW;
  std::vector<BoxSummary> abs_profile;
  std::vector<BoxSummary> signed_profile;
};

MetricsReport evaluate_forecast(const Eigen::Ref<const Eigen::MatrixXd>& actual,
                                const Eigen::Ref<const Eigen::MatrixXd>& forecast,
                                std::optional<double> reference_rmse = std::nullopt);

nlohmann::json to_json(const BoxSummary& box);
nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

}  // namespace vmdload
