#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support/synthetic.hpp"
#include "vmdload/errors.hpp"
#include "vmdload/pipeline/pipeline.hpp"

using namespace vmdload;
using namespace vmdload::pipeline;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small synthetic household and a fast configuration around it.
ExperimentConfig small_config(const std::string& name, int days = 30) {
  const auto dir = synth::scratch_dir(name);
  synth::write_csv(dir / "h1.csv", days, synth::daily_two_tone(1, 10.0));
  json j = {{"household.h1", "h1.csv"},
            {"vmd.k", json::array({"none", 2})},
            {"mwdn.levels", json::array({3})},
            {"train.epochs", 1},
            {"train.batch", 128},
            {"seed", 5},
            {"output_dir", "out"}};
  return ExperimentConfig::from_json(j, dir);
}

}  // namespace

TEST_CASE("config: parsing, defaults and relative paths") {
  const json j = {{"household.a", "data/a.csv"},   {"csv.timestamp_column", "ts"}, {"csv.power_column", "p"},
                  {"csv.delimiter", ";"},          {"split.train_fraction", 0.7}, {"vmd.k", {"none", 7, 31}},
                  {"vmd.alpha", 500.0},            {"vmd.tol", 1e-6},             {"vmd.max_iters", 300},
                  {"mwdn.levels", {4}},            {"model.profile", "paper-exact"}, {"train.epochs", 5},
                  {"train.lr", 0.001},             {"train.batch", 32},           {"seed", 9},
                  {"workers", 2}};
  const auto c = ExperimentConfig::from_json(j, "/base");
  CHECK(c.household_path("a") == std::filesystem::path("/base/data/a.csv"));
  CHECK(c.csv.timestamp_column == "ts");
  CHECK(c.csv.delimiter == ';');
  CHECK(c.train_fraction == 0.7);
  REQUIRE(c.k_list.size() == 3);
  CHECK_FALSE(c.k_list[0].has_value());
  CHECK(*c.k_list[2] == 31);
  CHECK(c.vmd.alpha == 500.0);
  CHECK(c.levels == std::vector<int>{4});
  CHECK(c.profile == forecast::ModelProfile::paper_exact);
  CHECK(c.train.epochs == 5);
  CHECK(c.seed == 9);
  CHECK(c.workers == 2);

  const auto d = ExperimentConfig::from_json(json::object());
  CHECK(d.k_list.size() == 7);
  CHECK(d.levels == std::vector<int>{3, 4, 5});
  CHECK(d.profile == forecast::ModelProfile::desk_scale);
  CHECK(d.vmd.alpha == 1000.0);
  CHECK(d.train_fraction == 0.8);

  const auto round = ExperimentConfig::from_json(c.to_json());
  CHECK(round.hash() == c.hash());
}

TEST_CASE("config: errors") {
  auto bad = [](json j) { return ExperimentConfig::from_json(j).validate(false); };
  CHECK_THROWS_AS(bad({{"vmd.alpah", 1.0}}), ConfigError);
  CHECK_THROWS_AS(bad({{"resample.minutes", 15}}), ConfigError);
  CHECK_THROWS_AS(bad({{"vmd.k", {0}}}), ConfigError);
  CHECK_THROWS_AS(bad({{"vmd.k", {"seven"}}}), ConfigError);
  CHECK_THROWS_AS(bad({{"split.train_fraction", 1.5}}), ConfigError);
  CHECK_THROWS_AS(bad({{"mwdn.levels", {0}}}), ConfigError);
  CHECK_THROWS_AS(bad({{"train.epochs", "ten"}}), ConfigError);
  CHECK_THROWS_AS(bad({{"model.profile", "big"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"household.x", "/nonexistent/x.csv"}}).validate(true), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::object()).household_path("zz"), ConfigError);
}

TEST_CASE("config: hash covers result-affecting keys only") {
  const auto a = ExperimentConfig::from_json({{"vmd.alpha", 1000.0}, {"output_dir", "x"}, {"workers", 1}});
  const auto b = ExperimentConfig::from_json({{"vmd.alpha", 1000.0}, {"output_dir", "y"}, {"workers", 8}});
  const auto c = ExperimentConfig::from_json({{"vmd.alpha", 1001.0}});
  const auto d = ExperimentConfig::from_json({{"seed", 1}});
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(a.hash() != d.hash());
  CHECK(a.hash() == ExperimentConfig::from_json({{"vmd.alpha", 1000.0}}).hash());
}

TEST_CASE("baseline: constant load is forecast exactly") {
  const auto dir = synth::scratch_dir("baseline_const");
  synth::write_csv(dir / "c.csv", 40, [](int) { return 321.0; });
  const auto config = ExperimentConfig::from_json({{"household.c", "c.csv"}}, dir);
  const auto result = baseline(config, "c");
  CHECK(result.days > 0);
  CHECK(result.metrics.rmse == 0.0);
  CHECK(result.metrics.mape == 0.0);
  CHECK(result.metrics.cv == 0.0);
}

TEST_CASE("decomposition of a household keeps the load additive") {
  const auto config = small_config("decompose");
  const auto data = prepare_household(config, "h1");
  const auto parts = decompose_household(config, data, 3);
  REQUIRE(parts.train.size() == 4);
  RowMatrix sum_in = RowMatrix::Zero(data.test.size(), 3 * kStepsPerDay);
  RowMatrix sum_out = RowMatrix::Zero(data.test.size(), kStepsPerDay);
  for (const auto& p : parts.test) {
    sum_in.leftCols(kStepsPerDay) += p.inputs.leftCols(kStepsPerDay);
    sum_out += p.targets;
    CHECK(p.inputs.rightCols(2 * kStepsPerDay) == data.test.inputs.rightCols(2 * kStepsPerDay));
  }
  CHECK((sum_in.leftCols(kStepsPerDay) - data.test.inputs.leftCols(kStepsPerDay)).cwiseAbs().maxCoeff() <
        1e-9 * data.test.inputs.leftCols(kStepsPerDay).cwiseAbs().maxCoeff());
  CHECK((sum_out - data.test.targets).cwiseAbs().maxCoeff() < 1e-9 * data.test.targets.cwiseAbs().maxCoeff());
  double shares = 0.0;
  for (double s : parts.energy_shares) shares += s;
  CHECK(shares > 0.0);
  const auto raw = decompose_household(config, data, std::nullopt);
  CHECK(raw.train.size() == 1);
}

TEST_CASE("run_pipeline writes every artefact and sums component forecasts") {
  const auto config = small_config("run");
  const auto data = prepare_household(config, "h1");
  const auto rec = run_pipeline(config, data, 2, 3);
  const auto dir = run_directory(config, "h1", 2, 3);
  CHECK(dir == config.output_dir / "runs" / "h1" / "K2_I3");
  CHECK(std::filesystem::exists(dir / "forecast.csv"));
  CHECK(std::filesystem::exists(dir / "record.json"));
  REQUIRE(rec.checkpoints.size() == 3);
  for (const auto& c : rec.checkpoints) CHECK(std::filesystem::exists(std::filesystem::path(c) / "manifest.json"));
  CHECK(rec.resumed.empty());
  CHECK(rec.config_hash == config.hash());
  CHECK(rec.metrics.rmse > 0.0);
  CHECK(rec.metrics.fs.has_value());
  CHECK(rec.reference_days > 0);
  CHECK(rec.test_windows == static_cast<int>(data.test.size()));

  std::ifstream csv(dir / "forecast.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 1 + rec.test_windows * kStepsPerDay);

  // Watt-space sum of per-component predictions, recomputed from the checkpoints.
  const auto parts = decompose_household(config, data, 2);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(kStepsPerDay);
  for (std::size_t i = 0; i < 3; ++i) {
    auto model = forecast::ForecastModel::load(rec.checkpoints[i]);
    total += model.predict(parts.test[i].slice(0, 1)).row(0).transpose();
  }
  for (int h = 0; h < kStepsPerDay; ++h) CHECK(std::abs(total[h] - rec.overlay_forecast[h]) < 1e-9);

  const auto back = RunRecord::from_json(json::parse(slurp(dir / "record.json")));
  CHECK(back.metrics.rmse == rec.metrics.rmse);
  CHECK(back.k == rec.k);
  CHECK(back.tag() == rec.tag());
}

TEST_CASE("resume reuses intact checkpoints and retrains missing ones") {
  const auto config = small_config("resume");
  const auto data = prepare_household(config, "h1");
  const auto first = run_pipeline(config, data, 2, 3, Stage::train);
  CHECK_FALSE(std::filesystem::exists(run_directory(config, "h1", 2, 3) / "forecast.csv"));
  const auto full = run_pipeline(config, data, 2, 3);
  CHECK(full.resumed == std::vector<int>{0, 1, 2});

  std::filesystem::remove_all(first.checkpoints[1]);
  const auto again = run_pipeline(config, data, 2, 3);
  CHECK(again.resumed == std::vector<int>{0, 2});
  CHECK(again.metrics.rmse == full.metrics.rmse);
  CHECK(again.metrics.cv == full.metrics.cv);

  // A different configuration must not pick up stale checkpoints.
  auto changed = config;
  changed.train.lr = 0.003;
  CHECK(run_pipeline(changed, data, 2, 3).resumed.empty());
}

TEST_CASE("sweep, csv and plots") {
  auto config = small_config("sweep");
  const auto records = sweep(config);
  REQUIRE(records.size() == 2);
  const auto text = slurp(config.output_dir / "sweep.csv");
  CHECK(text.rfind("household,model,K,I,rmse,fs,cv,mape\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("h1,mwdn-inception,none,3,") != std::string::npos);
  CHECK(text.find("h1,mwdn-inception,2,3,") != std::string::npos);

  auto other = config;
  other.output_dir = config.output_dir.parent_path() / "out2";
  sweep(other);
  CHECK(slurp(other.output_dir / "sweep.csv") == text);

  const auto files = emit_plots(records, config.output_dir / "plots");
  REQUIRE(files.size() == 5);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));

  auto lines_of = [](const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      rows.push_back(cells);
    }
    return rows;
  };
  // Four metric rows per record.
  CHECK(lines_of(slurp(files[0])).size() == 8);
  const auto& rec = records[1];
  const auto overlay = lines_of(slurp(config.output_dir / "plots" / ("overlay_" + rec.tag() + ".csv")));
  REQUIRE(overlay.size() == 48);
  CHECK(overlay[0].size() == 4);
  CHECK(std::stod(overlay[5][2]) == rec.overlay_forecast[5]);
  const auto box = lines_of(slurp(config.output_dir / "plots" / ("box_" + rec.tag() + ".csv")));
  REQUIRE(box.size() == 96);
  for (int h = 0; h < 48; ++h) {
    const auto& b = rec.metrics.abs_profile[static_cast<std::size_t>(h)];
    CHECK(box[h][1] == "absolute");
    CHECK(std::stod(box[h][2]) == b.q1);
    CHECK(std::stod(box[h][3]) == b.median);
    CHECK(std::stod(box[h][6]) == b.whisker_high);
    CHECK(std::stoi(box[h][9]) == b.outliers);
  }
  CHECK(box[48][1] == "signed");
}

TEST_CASE("stationarity csv") {
  const auto config = small_config("stat_csv");
  const auto data = prepare_household(config, "h1");
  const auto parts = decompose_household(config, data, 2);
  const auto result = batch_stationarity(parts.train);
  const auto path = config.output_dir / "stat.csv";
  std::filesystem::create_directories(config.output_dir);
  write_stationarity_csv(path, "h1", 2, result);
  const auto text = slurp(path);
  CHECK(text.rfind("household,decomposition,test,p_value,statistic,critical_value\n", 0) == 0);
  CHECK(text.find("h1,K2/imf0,ADF,") != std::string::npos);
  CHECK(text.find("h1,K2/residue,KPSS,") != std::string::npos);
  CHECK(text.find("h1,K2/mean,ADF,") != std::string::npos);
}

TEST_CASE("missing data surfaces as a data error") {
  const auto dir = synth::scratch_dir("short");
  synth::write_csv(dir / "s.csv", 2, [](int) { return 100.0; });
  const auto config = ExperimentConfig::from_json({{"household.s", "s.csv"}}, dir);
  CHECK_THROWS_AS(run_pipeline(config, "s", std::nullopt, 3), DataError);
}

TEST_CASE("decomposition lowers the error on a separable multi-tone signal") {
  const auto dir = synth::scratch_dir("paired");
  synth::write_csv(dir / "syn.csv", 30, synth::daily_two_tone(1, 10.0));
  const auto config = ExperimentConfig::from_json(
      {{"household.syn", "syn.csv"}, {"train.epochs", 10}, {"seed", 1}, {"output_dir", "out"}}, dir);
  const auto data = prepare_household(config, "syn");
  const double raw = run_pipeline(config, data, std::nullopt, 4).metrics.rmse;
  const double vmd = run_pipeline(config, data, 3, 4).metrics.rmse;
  MESSAGE("RMSE K=3 " << vmd << " W, none " << raw << " W");
  CHECK(vmd < raw);
}
