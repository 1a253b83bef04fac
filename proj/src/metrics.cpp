#include "vmdload/metrics.hpp"

#include <algorithm>

namespace vmdload {

double fs(double model_rmse, double reference_rmse) {
  if (!(reference_rmse > 0.0)) throw NumericalError("fs: reference RMSE must be positive");
  const double ratio = model_rmse / reference_rmse;
  return (1.0 - ratio * ratio) * 100.0;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ShapeError("quantile: no values");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BoxSummary box_summary(std::vector<double> values) {
  if (values.empty()) throw ShapeError("box_summary: no values");
  std::sort(values.begin(), values.end());
  BoxSummary box;
  box.q1 = quantile(values, 0.25);
  box.median = quantile(values, 0.5);
  box.q3 = quantile(values, 0.75);
  const double reach = 1.5 * (box.q3 - box.q1);
  const double lo_fence = box.q1 - reach;
  const double hi_fence = box.q3 + reach;
  box.min = values.front();
  box.max = values.back();
  box.whisker_low = *std::lower_bound(values.begin(), values.end(), lo_fence);
  box.whisker_high = *(std::upper_bound(values.begin(), values.end(), hi_fence) - 1);
  box.outliers = static_cast<int>(std::count_if(values.begin(), values.end(),
                                                [&](double v) { return v < lo_fence || v > hi_fence; }));
  box.count = static_cast<int>(values.size());
  return box;
}

std::vector<BoxSummary> horizon_error_profile(const Eigen::Ref<const Eigen::MatrixXd>& actual,
                                              const Eigen::Ref<const Eigen::MatrixXd>& forecast, ErrorKind kind) {
  detail::check_same_shape(actual, forecast, "horizon_error_profile");
  std::vector<BoxSummary> out;
  out.reserve(static_cast<std::size_t>(actual.cols()));
  for (Eigen::Index h = 0; h < actual.cols(); ++h) {
    Eigen::VectorXd e = forecast.col(h) - actual.col(h);
    if (kind == ErrorKind::absolute) e = e.cwiseAbs();
    out.push_back(box_summary(std::vector<double>(e.begin(), e.end())));
  }
  return out;
}

MetricsReport evaluate_forecast(const Eigen::Ref<const Eigen::MatrixXd>& actual,
                                const Eigen::Ref<const Eigen::MatrixXd>& forecast,
                                std::optional<double> reference_rmse) {
  MetricsReport r;
  r.mape = mape(actual, forecast);
  r.mape_percent = r.mape * 100.0;
  r.rmse = rmse(actual, forecast);
  r.cv = cv(actual, forecast);
  r.reference_rmse = reference_rmse;
  if (reference_rmse) {
    // A perfect reference only admits a perfect model; both then score zero skill.
    if (*reference_rmse == 0.0 && r.rmse == 0.0) {
      r.fs = 0.0;
    } else {
      r.fs = fs(r.rmse, *reference_rmse);
    }
  }
  r.abs_profile = horizon_error_profile(actual, forecast, ErrorKind::absolute);
  r.signed_profile = horizon_error_profile(actual, forecast, ErrorKind::signed_error);
  return r;
}

nlohmann::json to_json(const BoxSummary& b) {
  return {{"q1", b.q1},       {"median", b.median}, {"q3", b.q3},     {"whisker_low", b.whisker_low},
          {"whisker_high", b.whisker_high}, {"min", b.min}, {"max", b.max}, {"outliers", b.outliers},
          {"count", b.count}};
}

namespace {

BoxSummary box_from_json(const nlohmann::json& j) {
  BoxSummary b;
  b.q1 = j.at("q1");
  b.median = j.at("median");
  b.q3 = j.at("q3");
  b.whisker_low = j.at("whisker_low");
  b.whisker_high = j.at("whisker_high");
  b.min = j.at("min");
  b.max = j.at("max");
  b.outliers = j.at("outliers");
  b.count = j.at("count");
  return b;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j = {{"mape", r.mape}, {"mape_percent", r.mape_percent}, {"rmse", r.rmse},
                      {"cv", r.cv},     {"mape_floor_w", r.mape_floor_w}};
  j["fs"] = r.fs ? nlohmann::json(*r.fs) : nlohmann::json(nullptr);
  j["reference_rmse"] = r.reference_rmse ? nlohmann::json(*r.reference_rmse) : nlohmann::json(nullptr);
  auto profile = [](const std::vector<BoxSummary>& boxes) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& b : boxes) a.push_back(to_json(b));
    return a;
  };
  j["abs_profile"] = profile(r.abs_profile);
  j["signed_profile"] = profile(r.signed_profile);
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.mape = j.at("mape");
  r.mape_percent = j.at("mape_percent");
  r.rmse = j.at("rmse");
  r.cv = j.at("cv");
  r.mape_floor_w = j.value("mape_floor_w", kMapeFloorW);
  if (j.contains("fs") && j["fs"].is_number()) r.fs = j["fs"].get<double>();
  if (j.contains("reference_rmse") && j["reference_rmse"].is_number()) r.reference_rmse = j["reference_rmse"].get<double>();
  for (const auto& b : j.value("abs_profile", nlohmann::json::array())) r.abs_profile.push_back(box_from_json(b));
  for (const auto& b : j.value("signed_profile", nlohmann::json::array())) r.signed_profile.push_back(box_from_json(b));
  return r;
}

}  // namespace vmdload
