#include "vmdload/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "vmdload/errors.hpp"
#include "vmdload/parallel.hpp"

namespace vmdload {

std::string to_string(StationarityTest test) { return test == StationarityTest::adf ? "ADF" : "KPSS"; }
std::string to_string(Verdict verdict) { return verdict == Verdict::reject ? "reject" : "fail-to-reject"; }

namespace {

// Standard normal quantiles of the 1%, 2.5%, 5% and 10% levels.
constexpr std::array<double, 4> kLevelQuantiles{-2.3263478740408408, -1.959963984540054, -1.6448536269514729,
                                                -1.2815515655446004};

// MacKinnon (2010) response surfaces b0 + b1/T + b2/T^2 + b3/T^3 at 1%, 5%, 10%.
// The 2.5% row uses Fuller's asymptotic value with corrections averaged from 1% and 5%.
using Surface = std::array<std::array<double, 4>, 4>;

Surface adf_surface(AdfRegression regression) {
  auto mid = [](const std::array<double, 4>& one, const std::array<double, 4>& five, double asymptotic) {
    return std::array<double, 4>{asymptotic, 0.5 * (one[1] + five[1]), 0.5 * (one[2] + five[2]),
                                 0.5 * (one[3] + five[3])};
  };
  switch (regression) {
    case AdfRegression::none: {
      const std::array<double, 4> one{-2.56574, -2.2358, -3.627, 0.0};
      const std::array<double, 4> five{-1.94100, -0.2686, -3.365, 31.223};
      return {one, mid(one, five, -2.23), five, {-1.61682, 0.2656, -2.714, 25.364}};
    }
    case AdfRegression::constant: {
      const std::array<double, 4> one{-3.43035, -6.5393, -16.786, -79.433};
      const std::array<double, 4> five{-2.86154, -2.8903, -4.234, -40.040};
      return {one, mid(one, five, -3.12), five, {-2.56677, -1.5384, -2.809, 0.0}};
    }
    case AdfRegression::trend: {
      const std::array<double, 4> one{-3.95877, -9.0531, -28.428, -134.155};
      const std::array<double, 4> five{-3.41049, -4.3904, -9.036, -45.374};
      return {one, mid(one, five, -3.66), five, {-3.12705, -2.5856, -3.925, -22.380}};
    }
  }
  return {};
}

std::array<double, 4> adf_critical_values(AdfRegression regression, int nobs) {
  const auto surface = adf_surface(regression);
  const double inv = 1.0 / static_cast<double>(nobs);
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& b = surface[i];
    out[i] = b[0] + inv * (b[1] + inv * (b[2] + inv * b[3]));
  }
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

bool constant_series(const Eigen::VectorXd& x) { return (x.array() - x.mean()).abs().maxCoeff() == 0.0; }

}  // namespace

double interpolate_p_value(double statistic, const std::array<double, 4>& critical_values) {
  std::array<std::pair<double, double>, 4> points;
  for (std::size_t i = 0; i < 4; ++i) points[i] = {critical_values[i], kLevelQuantiles[i]};
  std::sort(points.begin(), points.end());
  std::size_t seg = 0;
  while (seg + 2 < points.size() && statistic > points[seg + 1].first) ++seg;
  const auto [x0, z0] = points[seg];
  const auto [x1, z1] = points[seg + 1];
  const double z = z0 + (statistic - x0) * (z1 - z0) / (x1 - x0);
  return std::clamp(normal_cdf(z), 1e-4, 0.9999);
}

StationarityReport adf_test(const Eigen::Ref<const Eigen::VectorXd>& series, std::optional<int> max_lag,
                            AdfRegression regression) {
  const Eigen::VectorXd y = series;
  const auto n = static_cast<int>(y.size());
  if (!y.allFinite()) throw DataError("adf: series contains non-finite values");
  const int lags =
      max_lag ? *max_lag : static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
  if (lags < 0) throw ConfigError("adf: max_lag must be >= 0");
  if (n <= lags + 10) {
    throw DataError("adf: series of length " + std::to_string(n) + " too short for " + std::to_string(lags) + " lags");
  }
  if (constant_series(y)) throw DataError("adf: constant series");

  const Eigen::VectorXd dy = y.tail(n - 1) - y.head(n - 1);
  const int nobs = n - 1 - lags;
  const int deterministic = regression == AdfRegression::none ? 0 : (regression == AdfRegression::constant ? 1 : 2);
  const int k = 1 + lags + deterministic;
  Eigen::MatrixXd x(nobs, k);
  Eigen::VectorXd target(nobs);
  for (int r = 0; r < nobs; ++r) {
    const int j = r + lags;  // index into dy
    target[r] = dy[j];
    x(r, 0) = y[j];
    for (int i = 1; i <= lags; ++i) x(r, i) = dy[j - i];
    if (deterministic >= 1) x(r, lags + 1) = 1.0;
    if (deterministic == 2) x(r, lags + 2) = static_cast<double>(r + 1);
  }
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::LDLT<Eigen::MatrixXd> solver(xtx);
  const Eigen::VectorXd beta = solver.solve(x.transpose() * target);
  const Eigen::VectorXd resid = target - x * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(nobs - k);
  const Eigen::VectorXd e0 = Eigen::VectorXd::Unit(k, 0);
  const double var0 = sigma2 * solver.solve(e0)[0];
  if (!(var0 > 0.0) || !std::isfinite(beta[0])) throw NumericalError("adf: singular regression");

  StationarityReport report;
  report.test = StationarityTest::adf;
  report.statistic = beta[0] / std::sqrt(var0);
  report.critical_values = adf_critical_values(regression, nobs);
  report.p_value = interpolate_p_value(report.statistic, report.critical_values);
  report.lags_used = lags;
  report.nobs = nobs;
  report.verdict = report.statistic < report.critical_values[0] ? Verdict::reject : Verdict::fail_to_reject;
  return report;
}

StationarityReport kpss_test(const Eigen::Ref<const Eigen::VectorXd>& series, std::optional<int> bandwidth,
                             KpssRegression regression) {
  const Eigen::VectorXd y = series;
  const auto n = static_cast<int>(y.size());
  if (n < 30) throw DataError("kpss: series of length " + std::to_string(n) + " too short (need 30)");
  if (!y.allFinite()) throw DataError("kpss: series contains non-finite values");
  if (constant_series(y)) throw DataError("kpss: constant series");

  Eigen::VectorXd resid;
  if (regression == KpssRegression::level) {
    resid = y.array() - y.mean();
  } else {
    Eigen::MatrixXd x(n, 2);
    x.col(0).setOnes();
    x.col(1) = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
    resid = y - x * x.colPivHouseholderQr().solve(y);
  }

  auto autocov = [&](int lag) { return resid.tail(n - lag).dot(resid.head(n - lag)); };
  int lags = 0;
  if (bandwidth) {
    if (*bandwidth < 0) throw ConfigError("kpss: bandwidth must be >= 0");
    lags = *bandwidth;
  } else {
    const int covlags = static_cast<int>(std::pow(static_cast<double>(n), 2.0 / 9.0));
    double s0 = resid.squaredNorm() / n;
    double s1 = 0.0;
    for (int i = 1; i <= covlags; ++i) {
      const double prod = autocov(i) / (n / 2.0);
      s0 += prod;
      s1 += i * prod;
    }
    const double gamma = 1.1447 * std::pow((s1 / s0) * (s1 / s0), 1.0 / 3.0);
    lags = static_cast<int>(gamma * std::pow(static_cast<double>(n), 1.0 / 3.0));
  }
  lags = std::min(lags, n - 1);

  double long_run = resid.squaredNorm();
  for (int i = 1; i <= lags; ++i) long_run += 2.0 * autocov(i) * (1.0 - i / (lags + 1.0));
  long_run /= n;
  if (!(long_run > 0.0)) throw NumericalError("kpss: non-positive long-run variance");

  Eigen::VectorXd partial(n);
  std::partial_sum(resid.begin(), resid.end(), partial.begin());
  const double eta = partial.squaredNorm() / (static_cast<double>(n) * n);

  StationarityReport report;
  report.test = StationarityTest::kpss;
  report.statistic = eta / long_run;
  report.critical_values = regression == KpssRegression::level ? std::array<double, 4>{0.739, 0.574, 0.463, 0.347}
                                                               : std::array<double, 4>{0.216, 0.176, 0.146, 0.119};
  report.p_value = interpolate_p_value(report.statistic, report.critical_values);
  report.lags_used = lags;
  report.nobs = n;
  report.verdict = report.statistic > report.critical_values[0] ? Verdict::reject : Verdict::fail_to_reject;
  return report;
}

Eigen::VectorXd stitch_series(const WindowedDataset& dataset) {
  std::vector<double> values;
  std::int64_t next = std::numeric_limits<std::int64_t>::min();
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    const auto t = dataset.window_start_times[static_cast<std::size_t>(i)];
    if (t < next) continue;
    const auto row = dataset.load(i);
    values.insert(values.end(), row.begin(), row.end());
    next = t + kDaySeconds;
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

BatchStationarity batch_stationarity(const std::vector<Eigen::VectorXd>& series, int workers) {
  if (series.empty()) throw DataError("batch_stationarity: no series");
  BatchStationarity out;
  out.adf.resize(series.size());
  out.kpss.resize(series.size());
  parallel_for(series.size(), workers, [&](std::size_t i) {
    out.adf[i] = adf_test(series[i]);
    out.kpss[i] = kpss_test(series[i]);
  });
  const auto count = static_cast<double>(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    out.mean_adf_statistic += out.adf[i].statistic / count;
    out.mean_adf_critical += out.adf[i].critical_value_1pct() / count;
    out.mean_kpss_statistic += out.kpss[i].statistic / count;
    out.mean_kpss_critical += out.kpss[i].critical_value_1pct() / count;
  }
  return out;
}

BatchStationarity batch_stationarity(const std::vector<WindowedDataset>& datasets, int workers) {
  std::vector<Eigen::VectorXd> series;
  series.reserve(datasets.size());
  for (const auto& d : datasets) series.push_back(stitch_series(d));
  return batch_stationarity(series, workers);
}

}  // namespace vmdload
