#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmdload/forecast/model.hpp"
#include "vmdload/load_data.hpp"
#include "vmdload/vmd.hpp"

namespace vmdload::pipeline {

/// Decomposition level of one run; std::nullopt trains a single model on the raw load.
using ModeCount = std::optional<int>;
std::string to_string(ModeCount k);

/// Experiment settings. The file form is one flat JSON object whose keys are listed in
/// README.md, e.g. {"household.h1": "data/h1.csv", "vmd.k": ["none", 7], "train.epochs": 30}.
struct ExperimentConfig {
  std::map<std::string, std::filesystem::path> households;
  CsvSchema csv;
  int granularity_minutes = 30;
  double train_fraction = 0.8;
  VmdConfig vmd;  // `modes` is set per run from k_list
  DecompositionScope scope = DecompositionScope::per_window;
  std::vector<ModeCount> k_list{std::nullopt, 7, 15, 31, 63, 127, 255};
  std::vector<int> levels{3, 4, 5};
  forecast::MwdnConfig mwdn;  // `levels` is set per run
  forecast::ModelProfile profile = forecast::ModelProfile::desk_scale;
  forecast::TrainOptions train;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  int workers = 1;

  static ExperimentConfig from_json(const nlohmann::json& flat, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Throws ConfigError on out-of-range values or missing data files.
  void validate(bool check_paths = true) const;
  /// FNV-1a over the canonical dump of every result-affecting key.
  std::string hash() const;
  const std::filesystem::path& household_path(const std::string& id) const;
};

}  // namespace vmdload::pipeline
