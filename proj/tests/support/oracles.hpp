#pragma once
// Independent reference computations for the test suites. Nothing here calls into the
// library's numerical code.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/Polynomials>

namespace oracle {

using cd = std::complex<double>;

/// O(n^2) DFT.
inline std::vector<cd> naive_dft(const Eigen::VectorXd& x) {
  const auto n = x.size();
  std::vector<cd> out(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n));
    }
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

/// Frequency (cycles/sample) of the largest non-DC DFT bin.
inline double peak_frequency(const Eigen::VectorXd& x) {
  const auto spec = naive_dft(x);
  std::size_t best = 1;
  for (std::size_t k = 1; k <= spec.size() / 2; ++k) {
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  }
  return static_cast<double>(best) / static_cast<double>(x.size());
}

inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

/// Daubechies low-pass synthesis filter with `moments` vanishing moments, built by spectral
/// factorization of P(y) = sum_k C(N-1+k, k) y^k keeping the zeros inside the unit circle.
/// Returned in the usual order (largest taps first for N = 4), normalized to sum sqrt(2).
inline std::vector<double> daubechies_lowpass(int moments) {
  const int n = moments;
  Eigen::VectorXd p(n);  // ascending powers of y
  for (int k = 0; k < n; ++k) p[k] = std::tgamma(n + k) / (std::tgamma(k + 1) * std::tgamma(n));
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(p);

  // Polynomial in z, ascending powers, starting from (1 + z)^N.
  std::vector<cd> poly{1.0};
  auto multiply = [&](cd root) {  // by (z - root)
    std::vector<cd> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i + 1] += poly[i];
      next[i] -= root * poly[i];
    }
    poly = next;
  };
  for (int i = 0; i < n; ++i) multiply(-1.0);
  for (Eigen::Index r = 0; r < solver.roots().size(); ++r) {
    // y = (1 - cos w) / 2 with cos w = (z + 1/z) / 2  =>  z^2 - (2 - 4y) z + 1 = 0.
    const cd y = solver.roots()[r];
    const cd b = 2.0 - 4.0 * y;
    const cd disc = std::sqrt(b * b - 4.0);
    const cd z1 = (b + disc) / 2.0;
    const cd z2 = (b - disc) / 2.0;
    multiply(std::abs(z1) < 1.0 ? z1 : z2);
  }
  std::vector<double> h;
  double sum = 0.0;
  for (const auto& c : poly) {
    h.push_back(c.real());
    sum += c.real();
  }
  for (auto& v : h) v *= std::numbers::sqrt2 / sum;
  return h;
}

/// Analysis pair as used by the common wavelet libraries: dec_lo = reversed synthesis
/// low-pass, dec_hi[k] = (-1)^(k+1) h[k].
struct AnalysisPair {
  std::vector<double> low, high;
};

inline AnalysisPair daubechies_analysis(int moments) {
  auto h = daubechies_lowpass(moments);
  // Keep the minimum-phase orientation with the dominant taps first.
  if (std::abs(h.front()) < std::abs(h.back())) std::reverse(h.begin(), h.end());
  AnalysisPair out;
  out.low.assign(h.rbegin(), h.rend());
  for (std::size_t k = 0; k < h.size(); ++k) out.high.push_back((k % 2 == 0 ? -1.0 : 1.0) * h[k]);
  return out;
}

/// y_n = sum_k x_{n+k} f_k, zeros past the end.
inline Eigen::VectorXd correlate_truncated(const Eigen::VectorXd& x, const std::vector<double>& f) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    for (std::size_t k = 0; k < f.size() && n + static_cast<Eigen::Index>(k) < x.size(); ++k) {
      y[n] += x[n + static_cast<Eigen::Index>(k)] * f[k];
    }
  }
  return y;
}

inline Eigen::VectorXd pairwise_mean(const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size() / 2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = 0.5 * (x[2 * i] + x[2 * i + 1]);
  return y;
}

struct FilterBankLevel {
  Eigen::VectorXd low, high;  // before decimation
};

/// Classical multilevel analysis with pairwise-mean decimation of the low branch.
inline std::vector<FilterBankLevel> filter_bank(Eigen::VectorXd x, const AnalysisPair& pair, int levels) {
  std::vector<FilterBankLevel> out;
  for (int l = 0; l < levels; ++l) {
    FilterBankLevel level{correlate_truncated(x, pair.low), correlate_truncated(x, pair.high)};
    x = pairwise_mean(level.low);
    out.push_back(std::move(level));
  }
  return out;
}

/// Central finite difference of f around x along every coordinate.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                        double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Type-7 quantile by full sort.
inline double sorted_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - (pos - static_cast<double>(i))) + v[i + 1] * (pos - static_cast<double>(i));
}

inline Eigen::VectorXd random_walk(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd x(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) x[i] = acc += d(rng);
  return x;
}

inline Eigen::VectorXd white_noise(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = d(rng);
  return x;
}

inline Eigen::VectorXd ar1(std::uint64_t seed, int n, double phi) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd x(n);
  double prev = 0.0;
  for (int i = 0; i < n; ++i) x[i] = prev = phi * prev + d(rng);
  return x;
}

}  // namespace oracle
