#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmdload/load_data.hpp"

namespace vmdload {

enum class VmdInit { all_zero, uniform, random };

struct VmdConfig {
  int modes = 1;            // K
  double alpha = 1000.0;    // bandwidth penalty
  double tol = 5e-6;
  double tau = 0.0;         // dual ascent step; 0 leaves the remainder in the residue
  int max_iters = 500;
  VmdInit init = VmdInit::all_zero;
  std::uint64_t seed = 0;   // used by VmdInit::random

  void validate() const;
};

/// K modes (rows, ascending center frequency) plus residue; modes.colwise().sum() + residue
/// reproduces the input.
struct ImfSet {
  Eigen::MatrixXd modes;          // K x length
  Eigen::VectorXd residue;
  Eigen::VectorXd center_freqs;   // cycles/sample in [0, 0.5]
  int iterations_used = 0;
  double final_delta = 0.0;
  std::vector<std::string> warnings;

  Eigen::Index mode_count() const { return modes.rows(); }
  Eigen::Index length() const { return residue.size(); }
  /// Share of total squared amplitude per mode, residue last.
  Eigen::VectorXd energy_shares() const;
};

/// Variational mode decomposition by ADMM on the half spectrum of the
/// mirror-extended signal. Modes are returned sorted by center frequency.
ImfSet vmd_decompose(const Eigen::Ref<const Eigen::VectorXd>& signal, const VmdConfig& config);

Eigen::VectorXd vmd_reconstruct(const ImfSet& imfs);

enum class DecompositionScope { per_window, whole_series };

/// Splits a dataset into K+1 datasets (mode 0..K-1, then residue) whose load channel
/// and targets hold the corresponding component; time channels are copied.
/// `workers` > 1 decomposes independent sequences on that many threads.
std::vector<WindowedDataset> decompose_dataset(const WindowedDataset& dataset, const VmdConfig& config,
                                               DecompositionScope scope = DecompositionScope::per_window,
                                               int workers = 1);

/// Writes `<stem>.lcw` (modes then residue, one block) and `<stem>.json`.
void save_imfset(const std::filesystem::path& stem, const ImfSet& imfs, const VmdConfig& config);
ImfSet load_imfset(const std::filesystem::path& stem);

std::string to_string(VmdInit init);
VmdInit parse_vmd_init(const std::string& text);
std::string to_string(DecompositionScope scope);
DecompositionScope parse_scope(const std::string& text);

}  // namespace vmdload
