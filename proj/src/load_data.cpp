#include "vmdload/load_data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "vmdload/container.hpp"
#include "vmdload/errors.hpp"

namespace vmdload {
namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

bool parse_double(const std::string& text, double& value) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc{} && ptr == end;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

WindowedDataset WindowedDataset::slice(Eigen::Index first, Eigen::Index count) const {
  WindowedDataset out;
  out.inputs = inputs.middleRows(first, count);
  out.targets = targets.middleRows(first, count);
  out.window_start_times.assign(window_start_times.begin() + first,
                                window_start_times.begin() + first + count);
  return out;
}

std::int64_t parse_timestamp(const std::string& text) {
  double epoch = 0.0;
  if (parse_double(text, epoch)) {
    if (!std::isfinite(epoch)) throw DataError("non-finite timestamp");
    return static_cast<std::int64_t>(std::floor(epoch));
  }
  static const std::regex iso(
      R"(^(\d{4})-(\d{2})-(\d{2})(?:[T ](\d{2}):(\d{2})(?::(\d{2}(?:\.\d+)?))?)?(?:Z|\+00:00)?$)");
  std::smatch m;
  if (!std::regex_match(text, m, iso)) throw DataError("unparseable timestamp '" + text + "'");
  const int y = std::stoi(m[1]);
  const int mo = std::stoi(m[2]);
  const int d = std::stoi(m[3]);
  const int h = m[4].matched ? std::stoi(m[4]) : 0;
  const int mi = m[5].matched ? std::stoi(m[5]) : 0;
  const double sec = m[6].matched ? std::stod(m[6]) : 0.0;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec >= 61) {
    throw DataError("invalid calendar timestamp '" + text + "'");
  }
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days_since_epoch) * kDaySeconds + h * 3600 + mi * 60 +
         static_cast<std::int64_t>(std::floor(sec));
}

LoadProfile ingest_csv(const std::filesystem::path& path, const CsvSchema& schema,
                       std::string household_id) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  int ts_col = -1, pw_col = -1;
  bool has_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    has_header = true;
    auto header = split(line, schema.delimiter);
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == schema.timestamp_column) ts_col = static_cast<int>(c);
      if (header[c] == schema.power_column) pw_col = static_cast<int>(c);
    }
    break;
  }
  if (!has_header) throw DataError(path.string() + ": no data rows");
  if (ts_col < 0 || pw_col < 0) {
    throw DataError(path.string() + ": header lacks columns '" + schema.timestamp_column + "' and/or '" +
                    schema.power_column + "'");
  }

  LoadProfile profile;
  profile.household_id = household_id.empty() ? path.stem().string() : std::move(household_id);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, schema.delimiter);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (static_cast<int>(fields.size()) <= std::max(ts_col, pw_col)) {
      throw DataError(where + ": malformed row (too few fields)");
    }
    std::int64_t t = 0;
    try {
      t = parse_timestamp(fields[static_cast<std::size_t>(ts_col)]);
    } catch (const DataError& e) {
      throw DataError(where + ": malformed row (" + e.what() + ")");
    }
    double p = 0.0;
    if (!parse_double(fields[static_cast<std::size_t>(pw_col)], p) || !std::isfinite(p) || p < 0.0) {
      throw DataError(where + ": malformed row (power '" + fields[static_cast<std::size_t>(pw_col)] +
                      "' is not a finite non-negative number)");
    }
    if (!profile.timestamps.empty() && t <= profile.timestamps.back()) {
      throw DataError(where + ": non-monotonic timestamps (" + std::to_string(t) + " after " +
                      std::to_string(profile.timestamps.back()) + ")");
    }
    profile.timestamps.push_back(t);
    profile.power_w.push_back(p);
  }
  if (profile.timestamps.empty()) throw DataError(path.string() + ": no data rows");

  if (profile.size() > 1) {
    std::vector<std::int64_t> diffs(profile.size() - 1);
    for (std::size_t i = 1; i < profile.size(); ++i) diffs[i - 1] = profile.timestamps[i] - profile.timestamps[i - 1];
    std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
    profile.source_period_s = static_cast<double>(diffs[diffs.size() / 2]);
  }
  return profile;
}

int hour_of_day(std::int64_t t) {
  return static_cast<int>((t - floor_div(t, kDaySeconds) * kDaySeconds) / 3600);
}

int day_of_week(std::int64_t t) {
  // 1970-01-01 was a Thursday (Monday = 0 -> Thursday = 3).
  const std::int64_t days = floor_div(t, kDaySeconds);
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

ResampledProfile resample_30min(const LoadProfile& profile) {
  if (profile.size() == 0) throw DataError("resample_30min: empty profile");
  const std::int64_t first_day = floor_div(profile.timestamps.front(), kDaySeconds);
  const std::int64_t last_day = floor_div(profile.timestamps.back(), kDaySeconds);
  const Eigen::Index days = last_day - first_day + 1;
  const Eigen::Index n = days * kStepsPerDay;

  ResampledProfile out;
  out.household_id = profile.household_id;
  out.start_time = first_day * kDaySeconds;
  out.power_w_30min = Eigen::VectorXd::Zero(n);
  out.sample_count.assign(static_cast<std::size_t>(n), 0);
  out.gap_mask.assign(static_cast<std::size_t>(n), false);

  for (std::size_t i = 0; i < profile.size(); ++i) {
    const auto b = static_cast<std::size_t>((profile.timestamps[i] - out.start_time) / kBucketSeconds);
    out.power_w_30min[static_cast<Eigen::Index>(b)] += profile.power_w[i];
    ++out.sample_count[b];
  }
  for (Eigen::Index b = 0; b < n; ++b) {
    const int c = out.sample_count[static_cast<std::size_t>(b)];
    if (c > 0) {
      out.power_w_30min[b] /= c;
    } else {
      out.gap_mask[static_cast<std::size_t>(b)] = true;
    }
  }

  // A first or last day with any empty bucket is dropped whole.
  auto mask_day_if_partial = [&](Eigen::Index day) {
    const auto begin = out.gap_mask.begin() + day * kStepsPerDay;
    if (std::any_of(begin, begin + kStepsPerDay, [](bool m) { return m; })) {
      std::fill(begin, begin + kStepsPerDay, true);
    }
  };
  mask_day_if_partial(0);
  mask_day_if_partial(days - 1);
  return out;
}

WindowedDataset build_windows(const ResampledProfile& resampled) {
  const Eigen::Index n = resampled.size();
  std::vector<Eigen::Index> starts;
  Eigen::Index run = 0;  // length of the clean run ending at b
  for (Eigen::Index b = 0; b < n; ++b) {
    run = resampled.gap_mask[static_cast<std::size_t>(b)] ? 0 : run + 1;
    if (run >= kWindowSpan) starts.push_back(b - kWindowSpan + 1);
  }
  if (starts.empty()) {
    throw DataError("build_windows: insufficient data (need 96 consecutive clean 30-minute buckets)");
  }

  WindowedDataset out;
  const auto count = static_cast<Eigen::Index>(starts.size());
  out.inputs.resize(count, kInputChannels * kStepsPerDay);
  out.targets.resize(count, kStepsPerDay);
  out.window_start_times.resize(starts.size());
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::Index s = starts[static_cast<std::size_t>(i)];
    out.window_start_times[static_cast<std::size_t>(i)] = resampled.bucket_time(s);
    out.inputs.row(i).segment(0, kStepsPerDay) = resampled.power_w_30min.segment(s, kStepsPerDay).transpose();
    out.targets.row(i) = resampled.power_w_30min.segment(s + kStepsPerDay, kStepsPerDay).transpose();
    for (int j = 0; j < kStepsPerDay; ++j) {
      const std::int64_t t = resampled.bucket_time(s + j);
      out.inputs(i, kStepsPerDay + j) = hour_of_day(t);
      out.inputs(i, 2 * kStepsPerDay + j) = day_of_week(t);
    }
  }
  return out;
}

std::pair<WindowedDataset, WindowedDataset> chrono_split(const WindowedDataset& dataset,
                                                         double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("chrono_split: train_fraction must lie in (0, 1)");
  }
  const Eigen::Index n = dataset.size();
  const auto n_train = static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train == n) {
    throw DataError("chrono_split: empty " + std::string(n_train == 0 ? "train" : "test") + " split for N=" +
                    std::to_string(n));
  }
  return {dataset.slice(0, n_train), dataset.slice(n_train, n - n_train)};
}

StandardizationParams fit_standardization(const Eigen::Ref<const Eigen::ArrayXd>& values) {
  if (values.size() == 0) throw DataError("fit_standardization: no values");
  StandardizationParams p;
  p.mean = values.mean();
  p.std = std::sqrt((values - p.mean).square().mean());
  if (!(p.std > 0.0)) {
    p.std = 1.0;
    p.degenerate = true;
  }
  return p;
}

DatasetStandardization fit_dataset_standardization(const WindowedDataset& train) {
  auto channel = [&](int c) {
    Eigen::ArrayXd v(train.size() * kStepsPerDay);
    for (Eigen::Index i = 0; i < train.size(); ++i) {
      v.segment(i * kStepsPerDay, kStepsPerDay) = train.inputs.row(i).segment(c * kStepsPerDay, kStepsPerDay).array().transpose();
    }
    return fit_standardization(v);
  };
  return {channel(0), channel(1), channel(2)};
}

WindowedDataset standardize_dataset(const WindowedDataset& data, const DatasetStandardization& params,
                                    Direction direction) {
  WindowedDataset out = data;
  const StandardizationParams* per_channel[] = {&params.load, &params.hour, &params.day};
  for (int c = 0; c < kInputChannels; ++c) {
    auto block = out.inputs.middleCols(c * kStepsPerDay, kStepsPerDay).array();
    block = standardize(block, *per_channel[c], direction);
  }
  out.targets = standardize(out.targets.array(), params.load, direction).matrix();
  return out;
}

void save_windowed(const std::filesystem::path& path, const WindowedDataset& dataset) {
  const auto n = static_cast<std::uint32_t>(dataset.size());
  std::vector<ContainerBlock> blocks(3);
  blocks[0] = {n, kInputChannels, kStepsPerDay,
               std::vector<double>(dataset.inputs.data(), dataset.inputs.data() + dataset.inputs.size())};
  blocks[1] = {n, 1, kStepsPerDay,
               std::vector<double>(dataset.targets.data(), dataset.targets.data() + dataset.targets.size())};
  blocks[2] = {n, 1, 1, std::vector<double>(dataset.window_start_times.begin(), dataset.window_start_times.end())};
  write_container(path, blocks);
}

WindowedDataset load_windowed(const std::filesystem::path& path) {
  auto blocks = read_container(path);
  if (blocks.size() != 3 || blocks[0].channels != kInputChannels || blocks[0].length != kStepsPerDay ||
      blocks[1].n != blocks[0].n || blocks[1].length != kStepsPerDay || blocks[2].n != blocks[0].n) {
    throw DataError(path.string() + ": not a windowed dataset container");
  }
  WindowedDataset out;
  const Eigen::Index n = blocks[0].n;
  out.inputs = Eigen::Map<const RowMatrix>(blocks[0].values.data(), n, kInputChannels * kStepsPerDay);
  out.targets = Eigen::Map<const RowMatrix>(blocks[1].values.data(), n, kStepsPerDay);
  out.window_start_times.reserve(static_cast<std::size_t>(n));
  for (double t : blocks[2].values) out.window_start_times.push_back(static_cast<std::int64_t>(t));
  return out;
}

}  // namespace vmdload
