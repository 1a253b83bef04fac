#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <vector>
#include <numbers>
#include <random>
#include <string>

#include "vmdload/load_data.hpp"

namespace synth {

inline constexpr std::int64_t kMonday = 1704067200;  // 2024-01-01T00:00:00Z

/// Writes `days` of 30-minute samples of f(step) starting at kMonday.
inline void write_csv(const std::filesystem::path& path, int days, const std::function<double(int)>& f) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "timestamp,power_w\n";
  out.precision(17);
  for (int t = 0; t < days * vmdload::kStepsPerDay; ++t) {
    out << kMonday + t * vmdload::kBucketSeconds << ',' << std::max(0.0, f(t)) << '\n';
  }
}

/// Fully observed profile with one value per bucket.
inline vmdload::ResampledProfile profile(int days, const std::function<double(int)>& f) {
  vmdload::ResampledProfile p;
  p.household_id = "synthetic";
  p.start_time = kMonday;
  const int n = days * vmdload::kStepsPerDay;
  p.power_w_30min.resize(n);
  for (int t = 0; t < n; ++t) p.power_w_30min[t] = f(t);
  p.gap_mask.assign(static_cast<std::size_t>(n), false);
  p.sample_count.assign(static_cast<std::size_t>(n), 1);
  return p;
}

/// Daily cycle plus two tones that are well separated at a 48-sample resolution, plus noise.
inline std::function<double(int)> daily_two_tone(std::uint64_t seed, double noise_sd) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  auto cache = std::make_shared<std::vector<double>>();
  return [rng, cache, noise_sd](int t) {
    std::normal_distribution<double> d(0.0, noise_sd);
    while (static_cast<int>(cache->size()) <= t) cache->push_back(d(*rng));
    const double two_pi = 2.0 * std::numbers::pi;
    return 400.0 + 150.0 * std::sin(two_pi * t / 48.0) + 80.0 * std::sin(two_pi * t / 6.0) +
           60.0 * std::sin(two_pi * t / 3.3) + (*cache)[static_cast<std::size_t>(t)];
  };
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vmdload_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace synth
