#include "vmdload/forecast/wavelet.hpp"

#include "vmdload/errors.hpp"

namespace vmdload::forecast {

const FilterPair& analysis_filters(Wavelet wavelet) {
  // Daubechies, 4 vanishing moments.
  static const FilterPair db4{
      {-0.010597401784997278, 0.032883011666982945, 0.030841381835986965, -0.18703481171888114,
       -0.02798376941698385, 0.6308807679295904, 0.7148465705525415, 0.23037781330885523},
      {-0.23037781330885523, 0.7148465705525415, -0.6308807679295904, -0.02798376941698385,
       0.18703481171888114, 0.030841381835986965, -0.032883011666982945, -0.010597401784997278},
  };
  switch (wavelet) {
    case Wavelet::db4: return db4;
  }
  return db4;
}

Eigen::MatrixXd shifted_filter_matrix(const std::array<double, 8>& filter, Eigen::Index length) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(length, length);
  for (Eigen::Index n = 0; n < length; ++n) {
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(filter.size()) && n + k < length; ++k) {
      m(n, n + k) = filter[static_cast<std::size_t>(k)];
    }
  }
  return m;
}

std::string to_string(Wavelet) { return "db4"; }

Wavelet parse_wavelet(const std::string& text) {
  if (text == "db4") return Wavelet::db4;
  throw ConfigError("unsupported wavelet '" + text + "' (only db4)");
}

}  // namespace vmdload::forecast
