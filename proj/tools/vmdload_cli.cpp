// Command-line front end. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 numerical failure, 1 anything else.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "vmdload/errors.hpp"
#include "vmdload/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vmdload;
using pipeline::ExperimentConfig;
using pipeline::ModeCount;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load_config(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  auto config = ExperimentConfig::load(g.config);
  if (g.seed) config.seed = *g.seed;
  if (!g.out.empty()) config.output_dir = g.out;
  config.validate();
  return config;
}

ModeCount parse_k(const std::string& text) {
  if (text == "none") return std::nullopt;
  try {
    std::size_t used = 0;
    const int k = std::stoi(text, &used);
    if (used == text.size() && k >= 1) return k;
  } catch (const std::exception&) {
  }
  throw ConfigError("--k expects a positive integer or 'none', got '" + text + "'");
}

std::vector<std::string> selected(const ExperimentConfig& config, const std::string& household) {
  if (!household.empty()) {
    config.household_path(household);
    return {household};
  }
  std::vector<std::string> all;
  for (const auto& [id, path] : config.households) all.push_back(id);
  return all;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VMD + mWDN(InceptionTime) day-ahead residential load forecasting"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Flat JSON experiment config");
  app.add_option("--seed", g.seed, "Override the base seed");
  app.add_option("--out", g.out, "Override the output directory");

  std::string household;
  std::string k_text = "none";
  int levels = 4;
  std::string records_dir;

  auto* ingest = app.add_subcommand("ingest", "Resample, window and split household data");
  auto* decompose = app.add_subcommand("decompose", "VMD-decompose windowed data into K+1 datasets");
  auto* stationarity = app.add_subcommand("stationarity", "ADF/KPSS tests per decomposed component");
  auto* train = app.add_subcommand("train", "Train and checkpoint the per-component models");
  auto* forecast = app.add_subcommand("forecast", "Write test-set forecasts (trains missing components)");
  auto* evaluate = app.add_subcommand("evaluate", "Full run with metrics and a run record");
  auto* baseline = app.add_subcommand("baseline", "Historical-mean baseline metrics");
  auto* sweep = app.add_subcommand("sweep", "Households x K list x levels");
  auto* plots = app.add_subcommand("emit-plots", "Plot data from run records");

  for (auto* sub : {ingest, decompose, stationarity, train, forecast, evaluate, baseline}) {
    sub->add_option("--household", household, "Household id (default: all)");
  }
  for (auto* sub : {decompose, stationarity, train, forecast, evaluate}) {
    sub->add_option("--k", k_text, "Number of VMD modes or 'none'");
  }
  for (auto* sub : {train, forecast, evaluate}) sub->add_option("--levels", levels, "mWDN levels I");
  plots->add_option("--records", records_dir, "Directory searched for record.json (default: <out>/runs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto config = load_config(g);

    if (*ingest) {
      for (const auto& h : selected(config, household)) {
        const auto data = pipeline::prepare_household(config, h);
        const auto dir = config.output_dir / "data" / h;
        fs::create_directories(dir);
        save_windowed(dir / "train.lcw", data.train);
        save_windowed(dir / "test.lcw", data.test);
        const auto masked = std::count(data.resampled.gap_mask.begin(), data.resampled.gap_mask.end(), true);
        write_json(dir / "summary.json", {{"household", h},
                                          {"start_time", data.resampled.start_time},
                                          {"buckets", data.resampled.size()},
                                          {"masked_buckets", masked},
                                          {"train_windows", data.train.size()},
                                          {"test_windows", data.test.size()}});
        std::cout << h << ": " << data.train.size() << " train / " << data.test.size() << " test windows -> "
                  << dir.string() << "\n";
      }
    } else if (*decompose || *stationarity) {
      const auto k = parse_k(k_text);
      for (const auto& h : selected(config, household)) {
        const auto data = pipeline::prepare_household(config, h);
        const auto comps = pipeline::decompose_household(config, data, k);
        if (*decompose) {
          const auto dir = config.output_dir / "imfs" / h / ("K" + pipeline::to_string(k));
          fs::create_directories(dir);
          for (std::size_t i = 0; i < comps.train.size(); ++i) {
            save_windowed(dir / ("train_" + std::to_string(i) + ".lcw"), comps.train[i]);
            save_windowed(dir / ("test_" + std::to_string(i) + ".lcw"), comps.test[i]);
          }
          write_json(dir / "manifest.json", {{"household", h},
                                             {"K", k ? nlohmann::json(*k) : nlohmann::json("none")},
                                             {"components", comps.train.size()},
                                             {"energy_shares", comps.energy_shares}});
          std::cout << h << ": " << comps.train.size() << " components -> " << dir.string() << "\n";
        } else {
          const auto result = batch_stationarity(comps.train, config.workers);
          const auto path = config.output_dir / ("stationarity_" + h + "_K" + pipeline::to_string(k) + ".csv");
          pipeline::write_stationarity_csv(path, h, k, result);
          std::size_t adf_rejects = 0;
          for (const auto& r : result.adf) adf_rejects += r.verdict == Verdict::reject;
          std::cout << h << ": ADF rejects unit root for " << adf_rejects << "/" << result.adf.size()
                    << " components -> " << path.string() << "\n";
        }
      }
    } else if (*train || *forecast || *evaluate) {
      const auto k = parse_k(k_text);
      const auto until = *train ? pipeline::Stage::train
                                : (*forecast ? pipeline::Stage::forecast : pipeline::Stage::evaluate);
      for (const auto& h : selected(config, household)) {
        const auto record = pipeline::run_pipeline(config, h, k, levels, until);
        const auto dir = pipeline::run_directory(config, h, k, levels);
        if (until == pipeline::Stage::evaluate) {
          std::cout << pipeline::metrics_csv_header() << pipeline::metrics_csv_row(record);
        } else {
          std::cout << h << ": " << record.checkpoints.size() << " components (" << record.resumed.size()
                    << " resumed) in " << dir.string() << "\n";
        }
      }
    } else if (*baseline) {
      for (const auto& h : selected(config, household)) {
        const auto result = pipeline::baseline(config, h);
        auto j = to_json(result.metrics);
        j["household"] = h;
        j["days"] = result.days;
        j["skipped_days"] = result.skipped_days;
        write_json(config.output_dir / ("baseline_" + h + ".json"), j);
        std::cout << h << ": RMSE " << result.metrics.rmse << " W, CV " << result.metrics.cv << " %, MAPE "
                  << result.metrics.mape_percent << " over " << result.days << " days\n";
      }
    } else if (*sweep) {
      const auto records = pipeline::sweep(config);
      std::cout << records.size() << " runs -> " << (config.output_dir / "sweep.csv").string() << "\n";
    } else if (*plots) {
      const fs::path root = records_dir.empty() ? config.output_dir / "runs" : fs::path(records_dir);
      if (!fs::exists(root)) throw DataError("no records under " + root.string());
      std::vector<fs::path> files;
      for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.path().filename() == "record.json") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      std::vector<pipeline::RunRecord> records;
      for (const auto& f : files) {
        std::ifstream in(f);
        records.push_back(pipeline::RunRecord::from_json(nlohmann::json::parse(in)));
      }
      const auto written = pipeline::emit_plots(records, config.output_dir / "plots");
      std::cout << written.size() << " plot files from " << records.size() << " records\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
