#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

namespace vmdload::forecast {

enum class Wavelet { db4 };

/// Analysis filter pair (decomposition low-pass / high-pass), 8 taps for db4.
struct FilterPair {
  std::array<double, 8> low;
  std::array<double, 8> high;
};

const FilterPair& analysis_filters(Wavelet wavelet);

/// Square matrix with the filter on shifted rows: M(n, n + k) = filter[k], so that
/// (M * x)_n = sum_k x_{n+k} filter_k with zeros past the end of x.
Eigen::MatrixXd shifted_filter_matrix(const std::array<double, 8>& filter, Eigen::Index length);

std::string to_string(Wavelet wavelet);
Wavelet parse_wavelet(const std::string& text);

}  // namespace vmdload::forecast
