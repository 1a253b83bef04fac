#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vmdload/errors.hpp"
#include "vmdload/metrics.hpp"

using namespace vmdload;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index h, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(n, h);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Eigen::MatrixXd row(std::initializer_list<double> v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

}  // namespace

TEST_CASE("hand-computed examples") {
  CHECK(mape(row({100}), row({150})) == 0.5);
  CHECK(mape(row({5, 7}), row({5, 7})) == 0.0);
  CHECK(rmse(row({0, 0}), row({3, 4})) == doctest::Approx(std::sqrt(12.5)));
  CHECK(rmse(row({1, 2}), row({1, 2})) == 0.0);
  CHECK(cv(row({10, 10}), row({10, 12})) == doctest::Approx(20.0));
  CHECK(cv(row({10, 10}), row({10, 10})) == 0.0);
  CHECK(fs(3.0, 3.0) == 0.0);
  CHECK(fs(0.0, 3.0) == 100.0);
  CHECK(fs(3.0 / std::sqrt(2.0), 3.0) == doctest::Approx(50.0));
}

TEST_CASE("zero actuals use the 1 W floor") {
  CHECK(mape(row({0}), row({2})) == 2.0);
  CHECK(mape(row({0.5}), row({1.0})) == 0.5);
  CHECK(mape(row({-4}), row({-2})) == 0.5);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(mape(row({1, 2}), row({1})), ShapeError);
  CHECK_THROWS_AS(rmse(Eigen::MatrixXd(0, 0), Eigen::MatrixXd(0, 0)), ShapeError);
  CHECK_THROWS_AS(cv(row({0, 0}), row({1, 1})), NumericalError);
  CHECK_THROWS_AS(cv(row({1}), row({1})), ShapeError);
  CHECK_THROWS_AS(fs(1.0, 0.0), NumericalError);
  CHECK_THROWS_AS(quantile({}, 0.5), ShapeError);
}

TEST_CASE("metrics match direct double-loop oracles") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const auto y = random_matrix(rng, 7, 48, -50.0, 900.0);
    const auto f = random_matrix(rng, 7, 48, 0.0, 900.0);
    double ape = 0.0, se = 0.0, sum_y = 0.0;
    for (int i = 0; i < 7; ++i)
      for (int h = 0; h < 48; ++h) {
        ape += std::abs(y(i, h) - f(i, h)) / std::max(std::abs(y(i, h)), 1.0);
        se += (y(i, h) - f(i, h)) * (y(i, h) - f(i, h));
        sum_y += y(i, h);
      }
    const double n = 7.0 * 48.0;
    CHECK(mape(y, f) == doctest::Approx(ape / n).epsilon(1e-12));
    CHECK(rmse(y, f) == doctest::Approx(std::sqrt(se / n)).epsilon(1e-12));
    CHECK(cv(y, f) == doctest::Approx(std::sqrt(se / (7.0 * 47.0)) / (sum_y / n) * 100.0).epsilon(1e-12));
  }
}

TEST_CASE("identities over 1000 random arrays") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dim(1, 60);
  // Actuals stay at or above 1 W after scaling, where the MAPE floor is inactive.
  std::uniform_real_distribution<double> scale(1.0, 1e3);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = dim(rng), h = dim(rng);
    const auto y = random_matrix(rng, n, h, 1.0, 1000.0);
    const auto f = random_matrix(rng, n, h, 0.0, 1000.0);
    const double c = scale(rng);
    const double r = rmse(y, f);
    CHECK(fs(r, r) == 0.0);
    CHECK(fs(0.0, r) == 100.0);
    CHECK(fs(r, r + 1.0) <= 100.0);
    CHECK(mape(y * c, f * c) == doctest::Approx(mape(y, f)).epsilon(1e-12));
    CHECK(r * r * n * h == doctest::Approx((y - f).squaredNorm()).epsilon(1e-9));
    CHECK(r >= 0.0);
  }
}

TEST_CASE("quantiles and box summaries match the sort-based oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 5.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> v(static_cast<std::size_t>(5 + rep * 7));
    for (auto& x : v) x = d(rng);
    for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
      CHECK(quantile(v, q) == doctest::Approx(oracle::sorted_quantile(v, q)).epsilon(1e-12));
    }
    const auto box = box_summary(v);
    const double q1 = oracle::sorted_quantile(v, 0.25), q3 = oracle::sorted_quantile(v, 0.75);
    const double lo = q1 - 1.5 * (q3 - q1), hi = q3 + 1.5 * (q3 - q1);
    double wl = 1e300, wh = -1e300;
    int out = 0;
    for (double x : v) {
      if (x < lo || x > hi) {
        ++out;
      } else {
        wl = std::min(wl, x);
        wh = std::max(wh, x);
      }
    }
    CHECK(box.q1 == doctest::Approx(q1));
    CHECK(box.q3 == doctest::Approx(q3));
    CHECK(box.median == doctest::Approx(oracle::sorted_quantile(v, 0.5)));
    CHECK(box.whisker_low == wl);
    CHECK(box.whisker_high == wh);
    CHECK(box.outliers == out);
    CHECK(box.count == static_cast<int>(v.size()));
  }
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  const auto spike = box_summary({1, 2, 3, 4, 100});
  CHECK(spike.outliers == 1);
  CHECK(spike.whisker_high == 4);
  CHECK(spike.max == 100);
}

TEST_CASE("per-horizon error profiles") {
  std::mt19937_64 rng(4);
  const auto y = random_matrix(rng, 30, 48, 100.0, 500.0);
  const auto perfect = horizon_error_profile(y, y);
  REQUIRE(perfect.size() == 48);
  for (const auto& b : perfect) {
    CHECK(b.median == 0.0);
    CHECK(b.q3 == 0.0);
    CHECK(b.whisker_high == 0.0);
  }
  const auto f = random_matrix(rng, 30, 48, 100.0, 500.0);
  const auto one = horizon_error_profile(y.topRows(1), f.topRows(1));
  for (int h = 0; h < 48; ++h) CHECK(one[h].median == doctest::Approx(std::abs(f(0, h) - y(0, h))));

  const auto abs_p = horizon_error_profile(y, f, ErrorKind::absolute);
  const auto signed_p = horizon_error_profile(y, f, ErrorKind::signed_error);
  for (int h = 0; h < 48; ++h) {
    std::vector<double> a, s;
    for (int i = 0; i < 30; ++i) {
      a.push_back(std::abs(f(i, h) - y(i, h)));
      s.push_back(f(i, h) - y(i, h));
    }
    CHECK(abs_p[h].median == doctest::Approx(oracle::sorted_quantile(a, 0.5)));
    CHECK(signed_p[h].q1 == doctest::Approx(oracle::sorted_quantile(s, 0.25)));
  }
}

TEST_CASE("report and json round trip") {
  std::mt19937_64 rng(5);
  const auto y = random_matrix(rng, 4, 48, 100.0, 500.0);
  const auto f = random_matrix(rng, 4, 48, 100.0, 500.0);
  const auto report = evaluate_forecast(y, f, rmse(y, f) * 2.0);
  CHECK(report.mape_percent == doctest::Approx(report.mape * 100.0));
  REQUIRE(report.fs.has_value());
  CHECK(*report.fs == doctest::Approx(75.0));
  CHECK(report.abs_profile.size() == 48);
  CHECK(report.signed_profile.size() == 48);
  const auto back = metrics_from_json(to_json(report));
  CHECK(back.rmse == report.rmse);
  CHECK(back.cv == report.cv);
  CHECK(*back.fs == *report.fs);
  CHECK(back.abs_profile.size() == 48);
  CHECK(back.abs_profile[7].median == report.abs_profile[7].median);
  CHECK_FALSE(evaluate_forecast(y, f).fs.has_value());
}
