#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(VMDLOAD_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, json j) {
  std::ofstream(dir / "config.json") << j.dump(2);
  return dir / "config.json";
}

}  // namespace

TEST_CASE("cli: config errors exit with 2") {
  const auto dir = synth::scratch_dir("cli_config");
  CHECK(run("ingest") == 2);
  CHECK(run("--config " + (dir / "missing.json").string() + " ingest") == 2);
  CHECK(run("--config " + write_config(dir, {{"vmd.alpah", 3}}).string() + " ingest") == 2);
  CHECK(run("--config " + write_config(dir, {{"household.h", "nothere.csv"}}).string() + " ingest") == 2);
  CHECK(run("--bogus-flag ingest") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("cli: data errors exit with 3") {
  const auto dir = synth::scratch_dir("cli_data");
  std::ofstream(dir / "bad.csv") << "timestamp,power_w\n1704067200,abc\n";
  CHECK(run("--config " + write_config(dir, {{"household.h", "bad.csv"}}).string() + " ingest") == 3);
  synth::write_csv(dir / "short.csv", 2, [](int) { return 100.0; });
  CHECK(run("--config " + write_config(dir, {{"household.h", "short.csv"}}).string() + " baseline") == 3);
}

TEST_CASE("cli: a diverging run exits with 4") {
  const auto dir = synth::scratch_dir("cli_numeric");
  synth::write_csv(dir / "h.csv", 12, synth::daily_two_tone(1, 10.0));
  const auto cfg = write_config(dir, {{"household.h", "h.csv"}, {"train.lr", 1e300}, {"train.epochs", 2},
                                      {"vmd.k", {"none"}}, {"mwdn.levels", {3}}, {"output_dir", "out"}});
  CHECK(run("--config " + cfg.string() + " train --k none --levels 3") == 4);
}

TEST_CASE("cli: every subcommand on a small household") {
  const auto dir = synth::scratch_dir("cli_flow");
  synth::write_csv(dir / "h.csv", 25, synth::daily_two_tone(2, 10.0));
  const auto cfg = write_config(dir, {{"household.h", "h.csv"}, {"train.epochs", 1}, {"vmd.k", {"none", 2}},
                                      {"mwdn.levels", {3}}, {"output_dir", "out"}});
  const std::string base = "--config " + cfg.string() + " --seed 3 --out " + (dir / "o").string() + " ";
  const auto out = dir / "o";
  CHECK(run(base + "ingest") == 0);
  CHECK(fs::exists(out / "data" / "h" / "train.lcw"));
  CHECK(fs::exists(out / "data" / "h" / "summary.json"));
  CHECK(run(base + "decompose --k 2") == 0);
  CHECK(fs::exists(out / "imfs" / "h" / "K2" / "manifest.json"));
  CHECK(fs::exists(out / "imfs" / "h" / "K2" / "test_2.lcw"));
  CHECK(run(base + "stationarity --k 2") == 0);
  CHECK(fs::exists(out / "stationarity_h_K2.csv"));
  CHECK(run(base + "train --k 2 --levels 3") == 0);
  CHECK(fs::exists(out / "runs" / "h" / "K2_I3" / "component_2" / "manifest.json"));
  CHECK(run(base + "forecast --k 2 --levels 3") == 0);
  CHECK(fs::exists(out / "runs" / "h" / "K2_I3" / "forecast.csv"));
  CHECK(run(base + "evaluate --k 2 --levels 3") == 0);
  CHECK(fs::exists(out / "runs" / "h" / "K2_I3" / "record.json"));
  CHECK(run(base + "baseline") == 0);
  CHECK(fs::exists(out / "baseline_h.json"));
  CHECK(run(base + "sweep") == 0);
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(run(base + "emit-plots") == 0);
  CHECK(fs::exists(out / "plots" / "bars.csv"));
  CHECK(run(base + "evaluate --k seven") == 2);
}
