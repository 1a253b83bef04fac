#include "vmdload/pipeline/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>

#include "vmdload/errors.hpp"
#include "vmdload/forecast/historical_mean.hpp"
#include "vmdload/parallel.hpp"

namespace vmdload::pipeline {

using nlohmann::json;

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Round-trip precision for plot data, so it can be compared with the in-memory values.
std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

// Stage-tagged rethrow that keeps the exit-code category.
template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

}  // namespace

HouseholdData prepare_household(const ExperimentConfig& config, const std::string& household) {
  return stage("ingest", [&] {
    HouseholdData data;
    data.household = household;
    const auto profile = ingest_csv(config.household_path(household), config.csv, household);
    data.resampled = resample_30min(profile);
    auto [train, test] = chrono_split(build_windows(data.resampled), config.train_fraction);
    data.train = std::move(train);
    data.test = std::move(test);
    return data;
  });
}

ComponentData decompose_household(const ExperimentConfig& config, const HouseholdData& data, ModeCount k) {
  return stage("decompose", [&] {
    ComponentData out;
    if (!k) {
      out.train = {data.train};
      out.test = {data.test};
      out.energy_shares = {1.0};
      return out;
    }
    VmdConfig vmd = config.vmd;
    vmd.modes = *k;
    vmd.seed = config.seed;
    out.train = decompose_dataset(data.train, vmd, config.scope, config.workers);
    out.test = decompose_dataset(data.test, vmd, config.scope, config.workers);
    double total = 0.0;
    for (const auto& d : out.train) {
      out.energy_shares.push_back(d.inputs.leftCols(kStepsPerDay).squaredNorm());
      total += out.energy_shares.back();
    }
    if (total > 0.0) {
      for (auto& e : out.energy_shares) e /= total;
    }
    return out;
  });
}

BaselineResult run_baseline(const HouseholdData& data) {
  return stage("baseline", [&] {
    if (data.test.size() == 0) throw DataError("empty test set");
    const auto run = forecast::evaluate_historical_mean(data.resampled, data.test.window_start_times.front() + kDaySeconds);
    if (run.actual.rows() == 0) throw DataError("no test day has 21 complete days of history");
    BaselineResult result;
    result.metrics = evaluate_forecast(run.actual, run.forecast);
    result.days = static_cast<int>(run.actual.rows());
    result.skipped_days = run.skipped_days;
    return result;
  });
}

BaselineResult baseline(const ExperimentConfig& config, const std::string& household) {
  return run_baseline(prepare_household(config, household));
}

std::string RunRecord::tag() const {
  return household + "_K" + to_string(k) + "_I" + std::to_string(levels);
}

json RunRecord::to_json() const {
  json stages = json::array();
  for (const auto& [name, seconds] : stage_seconds) stages.push_back({{"stage", name}, {"seconds", seconds}});
  return {{"config_hash", config_hash},
          {"household", household},
          {"model", model},
          {"K", k ? json(*k) : json("none")},
          {"I", levels},
          {"seed", seed},
          {"stage_seconds", stages},
          {"metrics", vmdload::to_json(metrics)},
          {"reference_policy", reference_policy},
          {"reference_days", reference_days},
          {"checkpoints", checkpoints},
          {"resumed", resumed},
          {"energy_shares", energy_shares},
          {"train_windows", train_windows},
          {"test_windows", test_windows},
          {"overlay", {{"start", overlay_start}, {"actual", overlay_actual}, {"forecast", overlay_forecast}}}};
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.config_hash = j.at("config_hash");
  r.household = j.at("household");
  r.model = j.value("model", r.model);
  const auto& k = j.at("K");
  r.k = k.is_number() ? ModeCount(k.get<int>()) : std::nullopt;
  r.levels = j.at("I");
  r.seed = j.value("seed", std::uint64_t{0});
  for (const auto& s : j.value("stage_seconds", json::array())) r.stage_seconds.emplace_back(s.at("stage"), s.at("seconds"));
  r.metrics = metrics_from_json(j.at("metrics"));
  r.reference_policy = j.value("reference_policy", r.reference_policy);
  r.reference_days = j.value("reference_days", 0);
  r.checkpoints = j.value("checkpoints", std::vector<std::string>{});
  r.resumed = j.value("resumed", std::vector<int>{});
  r.energy_shares = j.value("energy_shares", std::vector<double>{});
  r.train_windows = j.value("train_windows", 0);
  r.test_windows = j.value("test_windows", 0);
  if (j.contains("overlay")) {
    const auto& o = j["overlay"];
    r.overlay_start = o.value("start", std::int64_t{0});
    r.overlay_actual = o.value("actual", std::vector<double>{});
    r.overlay_forecast = o.value("forecast", std::vector<double>{});
  }
  return r;
}

std::filesystem::path run_directory(const ExperimentConfig& config, const std::string& household, ModeCount k,
                                    int levels) {
  return config.output_dir / "runs" / household / ("K" + to_string(k) + "_I" + std::to_string(levels));
}

RunRecord run_pipeline(const ExperimentConfig& config, const HouseholdData& data, ModeCount k, int levels,
                       Stage until) {
  RunRecord rec;
  rec.config_hash = config.hash();
  rec.household = data.household;
  rec.k = k;
  rec.levels = levels;
  rec.seed = config.seed;
  rec.train_windows = static_cast<int>(data.train.size());
  rec.test_windows = static_cast<int>(data.test.size());
  StageClock clock(rec.stage_seconds);

  std::optional<double> reference;
  try {
    const auto base = run_baseline(data);
    reference = base.metrics.rmse;
    rec.reference_days = base.days;
  } catch (const DataError&) {
    // No evaluable baseline day: the record carries no skill score.
  }
  clock.lap("baseline");

  const auto components = decompose_household(config, data, k);
  rec.energy_shares = components.energy_shares;
  clock.lap("decompose");

  const auto dir = run_directory(config, data.household, k, levels);
  const std::size_t count = components.train.size();
  std::vector<RowMatrix> forecasts(count);
  std::vector<char> resumed(count, 0);
  forecast::MwdnConfig mwdn = config.mwdn;
  mwdn.levels = levels;

  stage("train", [&] {
    parallel_for(count, config.workers, [&](std::size_t i) {
      const auto cdir = dir / ("component_" + std::to_string(i));
      const std::uint64_t seed = config.seed + i;
      std::unique_ptr<forecast::ForecastModel> model;
      if (std::filesystem::exists(cdir / "manifest.json")) {
        json meta;
        auto loaded = std::make_unique<forecast::ForecastModel>(forecast::ForecastModel::load(cdir, &meta));
        if (meta.value("config_hash", std::string{}) == rec.config_hash && meta.value("component", -1) == static_cast<int>(i)) {
          model = std::move(loaded);
          resumed[i] = 1;
        }
      }
      if (!model) {
        model = std::make_unique<forecast::ForecastModel>(mwdn, config.profile, seed);
        const auto params = fit_dataset_standardization(components.train[i]);
        model->attach_standardization(params);
        auto options = config.train;
        options.seed = seed;
        model->train(standardize_dataset(components.train[i], params, Direction::forward), options);
        model->save(cdir, {{"config_hash", rec.config_hash},
                           {"component", static_cast<int>(i)},
                           {"K", k ? json(*k) : json("none")},
                           {"I", levels},
                           {"profile", forecast::to_string(config.profile)},
                           {"epochs", config.train.epochs},
                           {"household", data.household}});
      }
      if (until != Stage::train) forecasts[i] = model->predict(components.test[i]);
    });
    return 0;
  });
  for (std::size_t i = 0; i < count; ++i) {
    rec.checkpoints.push_back((dir / ("component_" + std::to_string(i))).string());
    if (resumed[i]) rec.resumed.push_back(static_cast<int>(i));
  }
  clock.lap("train");
  if (until == Stage::train) return rec;

  const RowMatrix summed = forecast::sum_forecasts(forecasts);
  {
    std::string text = "window_start,horizon,actual,forecast\n";
    for (Eigen::Index r = 0; r < summed.rows(); ++r) {
      for (Eigen::Index h = 0; h < summed.cols(); ++h) {
        text += std::to_string(data.test.window_start_times[static_cast<std::size_t>(r)]) + "," + std::to_string(h) +
                "," + number(data.test.targets(r, h)) + "," + number(summed(r, h)) + "\n";
      }
    }
    write_text(dir / "forecast.csv", text);
  }
  clock.lap("forecast");
  if (until == Stage::forecast) return rec;

  rec.metrics = stage("evaluate", [&] { return evaluate_forecast(data.test.targets, summed, reference); });
  rec.overlay_start = data.test.window_start_times.front() + kDaySeconds;
  rec.overlay_actual.assign(data.test.targets.row(0).begin(), data.test.targets.row(0).end());
  rec.overlay_forecast.assign(summed.row(0).begin(), summed.row(0).end());
  clock.lap("evaluate");
  write_text(dir / "record.json", rec.to_json().dump(2) + "\n");
  return rec;
}

RunRecord run_pipeline(const ExperimentConfig& config, const std::string& household, ModeCount k, int levels,
                       Stage until) {
  return run_pipeline(config, prepare_household(config, household), k, levels, until);
}

std::string metrics_csv_header() { return "household,model,K,I,rmse,fs,cv,mape\n"; }

std::string metrics_csv_row(const RunRecord& r) {
  return r.household + "," + r.model + "," + to_string(r.k) + "," + std::to_string(r.levels) + "," +
         number(r.metrics.rmse) + "," + (r.metrics.fs ? number(*r.metrics.fs) : std::string{}) + "," +
         number(r.metrics.cv) + "," + number(r.metrics.mape_percent) + "\n";
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  std::string text = metrics_csv_header();
  for (const auto& r : records) text += metrics_csv_row(r);
  write_text(path, text);
}

std::vector<RunRecord> sweep(const ExperimentConfig& config) {
  std::vector<RunRecord> records;
  for (const auto& [household, path] : config.households) {
    const auto data = prepare_household(config, household);
    for (const auto& k : config.k_list) {
      for (int levels : config.levels) records.push_back(run_pipeline(config, data, k, levels));
    }
  }
  write_sweep_csv(config.output_dir / "sweep.csv", records);
  return records;
}

std::vector<std::filesystem::path> emit_plots(const std::vector<RunRecord>& records,
                                              const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  std::string bars = "household,model,K,I,metric,value\n";
  for (const auto& r : records) {
    const auto prefix = r.household + "," + r.model + "," + to_string(r.k) + "," + std::to_string(r.levels) + ",";
    bars += prefix + "rmse," + number(r.metrics.rmse) + "\n";
    bars += prefix + "fs," + (r.metrics.fs ? number(*r.metrics.fs) : std::string{}) + "\n";
    bars += prefix + "cv," + number(r.metrics.cv) + "\n";
    bars += prefix + "mape," + number(r.metrics.mape_percent) + "\n";

    std::string overlay = "t,actual,forecast,error\n";
    for (std::size_t h = 0; h < r.overlay_actual.size() && h < r.overlay_forecast.size(); ++h) {
      const auto t = r.overlay_start + static_cast<std::int64_t>(h) * kBucketSeconds;
      overlay += std::to_string(t) + "," + exact(r.overlay_actual[h]) + "," + exact(r.overlay_forecast[h]) + "," +
                 exact(r.overlay_forecast[h] - r.overlay_actual[h]) + "\n";
    }
    written.push_back(dir / ("overlay_" + r.tag() + ".csv"));
    write_text(written.back(), overlay);

    std::string box = "horizon,kind,q1,median,q3,whisker_low,whisker_high,min,max,outliers,count\n";
    auto rows = [&](const std::vector<BoxSummary>& profile, const char* kind) {
      for (std::size_t h = 0; h < profile.size(); ++h) {
        const auto& b = profile[h];
        box += std::to_string(h + 1) + "," + kind + "," + exact(b.q1) + "," + exact(b.median) + "," + exact(b.q3) +
               "," + exact(b.whisker_low) + "," + exact(b.whisker_high) + "," + exact(b.min) + "," + exact(b.max) +
               "," + std::to_string(b.outliers) + "," + std::to_string(b.count) + "\n";
      }
    };
    rows(r.metrics.abs_profile, "absolute");
    rows(r.metrics.signed_profile, "signed");
    written.push_back(dir / ("box_" + r.tag() + ".csv"));
    write_text(written.back(), box);
  }
  written.insert(written.begin(), dir / "bars.csv");
  write_text(dir / "bars.csv", bars);
  return written;
}

void write_stationarity_csv(const std::filesystem::path& path, const std::string& household, ModeCount k,
                            const BatchStationarity& result) {
  const auto label = k ? "K" + std::to_string(*k) : std::string("none");
  std::string text = "household,decomposition,test,p_value,statistic,critical_value\n";
  auto component = [&](std::size_t i) {
    if (!k) return label;
    return label + (i + 1 == result.adf.size() ? std::string("/residue") : "/imf" + std::to_string(i));
  };
  double adf_p = 0.0, kpss_p = 0.0;
  for (std::size_t i = 0; i < result.adf.size(); ++i) {
    for (const auto* r : {&result.adf[i], &result.kpss[i]}) {
      text += household + "," + component(i) + "," + vmdload::to_string(r->test) + "," + number(r->p_value) + "," +
              number(r->statistic) + "," + number(r->critical_value_1pct()) + "\n";
    }
    adf_p += result.adf[i].p_value / static_cast<double>(result.adf.size());
    kpss_p += result.kpss[i].p_value / static_cast<double>(result.kpss.size());
  }
  text += household + "," + label + "/mean,ADF," + number(adf_p) + "," + number(result.mean_adf_statistic) + "," +
          number(result.mean_adf_critical) + "\n";
  text += household + "," + label + "/mean,KPSS," + number(kpss_p) + "," + number(result.mean_kpss_statistic) + "," +
          number(result.mean_kpss_critical) + "\n";
  write_text(path, text);
}

}  // namespace vmdload::pipeline
