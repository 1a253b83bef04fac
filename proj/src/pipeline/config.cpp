#include "vmdload/pipeline/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "vmdload/errors.hpp"

namespace vmdload::pipeline {

std::string to_string(ModeCount k) { return k ? std::to_string(*k) : "none"; }

namespace {

using nlohmann::json;

template <typename T>
T typed(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + value.dump());
  }
}

ModeCount parse_mode_count(const json& v, const std::string& key) {
  if (v.is_string()) {
    if (v.get<std::string>() == "none") return std::nullopt;
    throw ConfigError("config key '" + key + "': expected an integer or \"none\", got " + v.dump());
  }
  return typed<int>(v, key);
}

forecast::MwdnPooling parse_pooling(const std::string& text) {
  if (text == "halving") return forecast::MwdnPooling::halving;
  if (text == "length-preserving") return forecast::MwdnPooling::length_preserving;
  throw ConfigError("unknown mwdn pooling '" + text + "'");
}

std::string pooling_name(forecast::MwdnPooling p) {
  return p == forecast::MwdnPooling::halving ? "halving" : "length-preserving";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& flat, const std::filesystem::path& base_dir) {
  if (!flat.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  auto path_of = [&](const json& v, const std::string& key) {
    std::filesystem::path p = typed<std::string>(v, key);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  for (const auto& [key, v] : flat.items()) {
    if (key.rfind("household.", 0) == 0) {
      const auto id = key.substr(10);
      if (id.empty()) throw ConfigError("empty household id in key '" + key + "'");
      c.households[id] = path_of(v, key);
    } else if (key == "csv.timestamp_column") {
      c.csv.timestamp_column = typed<std::string>(v, key);
    } else if (key == "csv.power_column") {
      c.csv.power_column = typed<std::string>(v, key);
    } else if (key == "csv.delimiter") {
      const auto d = typed<std::string>(v, key);
      if (d.size() != 1) throw ConfigError("csv.delimiter must be a single character");
      c.csv.delimiter = d[0];
    } else if (key == "resample.minutes") {
      c.granularity_minutes = typed<int>(v, key);
    } else if (key == "split.train_fraction") {
      c.train_fraction = typed<double>(v, key);
    } else if (key == "vmd.k") {
      if (!v.is_array()) throw ConfigError("vmd.k must be an array");
      c.k_list.clear();
      for (const auto& e : v) c.k_list.push_back(parse_mode_count(e, key));
    } else if (key == "vmd.alpha") {
      c.vmd.alpha = typed<double>(v, key);
    } else if (key == "vmd.tol") {
      c.vmd.tol = typed<double>(v, key);
    } else if (key == "vmd.tau") {
      c.vmd.tau = typed<double>(v, key);
    } else if (key == "vmd.max_iters") {
      c.vmd.max_iters = typed<int>(v, key);
    } else if (key == "vmd.init") {
      c.vmd.init = parse_vmd_init(typed<std::string>(v, key));
    } else if (key == "vmd.scope") {
      c.scope = parse_scope(typed<std::string>(v, key));
    } else if (key == "mwdn.levels") {
      if (!v.is_array()) throw ConfigError("mwdn.levels must be an array");
      c.levels.clear();
      for (const auto& e : v) c.levels.push_back(typed<int>(e, key));
    } else if (key == "mwdn.noise_scale") {
      c.mwdn.noise_scale = typed<double>(v, key);
    } else if (key == "mwdn.pooling") {
      c.mwdn.pooling = parse_pooling(typed<std::string>(v, key));
    } else if (key == "model.profile") {
      c.profile = forecast::parse_profile(typed<std::string>(v, key));
    } else if (key == "train.lr") {
      c.train.lr = typed<double>(v, key);
    } else if (key == "train.batch") {
      c.train.batch = typed<int>(v, key);
    } else if (key == "train.epochs") {
      c.train.epochs = typed<int>(v, key);
    } else if (key == "seed") {
      c.seed = typed<std::uint64_t>(v, key);
    } else if (key == "output_dir") {
      c.output_dir = path_of(v, key);
    } else if (key == "workers") {
      c.workers = typed<int>(v, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json flat;
  try {
    flat = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(flat, path.parent_path());
}

json ExperimentConfig::to_json() const {
  json j = json::object();
  for (const auto& [id, p] : households) j["household." + id] = p.string();
  j["csv.timestamp_column"] = csv.timestamp_column;
  j["csv.power_column"] = csv.power_column;
  j["csv.delimiter"] = std::string(1, csv.delimiter);
  j["resample.minutes"] = granularity_minutes;
  j["split.train_fraction"] = train_fraction;
  json ks = json::array();
  for (const auto& k : k_list) ks.push_back(k ? json(*k) : json("none"));
  j["vmd.k"] = ks;
  j["vmd.alpha"] = vmd.alpha;
  j["vmd.tol"] = vmd.tol;
  j["vmd.tau"] = vmd.tau;
  j["vmd.max_iters"] = vmd.max_iters;
  j["vmd.init"] = vmdload::to_string(vmd.init);
  j["vmd.scope"] = vmdload::to_string(scope);
  j["mwdn.levels"] = levels;
  j["mwdn.noise_scale"] = mwdn.noise_scale;
  j["mwdn.pooling"] = pooling_name(mwdn.pooling);
  j["model.profile"] = forecast::to_string(profile);
  j["train.lr"] = train.lr;
  j["train.batch"] = train.batch;
  j["train.epochs"] = train.epochs;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["workers"] = workers;
  return j;
}

void ExperimentConfig::validate(bool check_paths) const {
  if (households.empty()) throw ConfigError("config lists no households");
  if (check_paths) {
    for (const auto& [id, p] : households) {
      if (!std::filesystem::exists(p)) throw ConfigError("household '" + id + "': file " + p.string() + " not found");
    }
  }
  if (granularity_minutes != 30) throw ConfigError("resample.minutes: only 30-minute buckets are supported");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split.train_fraction must be in (0, 1)");
  if (k_list.empty()) throw ConfigError("vmd.k must not be empty");
  for (const auto& k : k_list) {
    if (k && *k < 1) throw ConfigError("vmd.k entries must be >= 1 or \"none\"");
  }
  if (levels.empty()) throw ConfigError("mwdn.levels must not be empty");
  for (int i : levels) {
    if (i < 1) throw ConfigError("mwdn.levels entries must be >= 1");
  }
  VmdConfig probe = vmd;
  probe.modes = 1;
  probe.validate();
  mwdn.validate();
  if (train.epochs < 0 || train.batch < 1 || !(train.lr > 0.0)) {
    throw ConfigError("train: epochs >= 0, batch >= 1 and lr > 0 required");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("output_dir");
  j.erase("workers");
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::filesystem::path& ExperimentConfig::household_path(const std::string& id) const {
  auto it = households.find(id);
  if (it == households.end()) throw ConfigError("unknown household '" + id + "'");
  return it->second;
}

}  // namespace vmdload::pipeline
