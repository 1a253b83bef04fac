#include "vmdload/vmd.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <unsupported/Eigen/FFT>

#include "json.hpp"
#include "vmdload/container.hpp"
#include "vmdload/errors.hpp"
#include "vmdload/parallel.hpp"

namespace vmdload {
namespace {

using Complex = std::complex<double>;
using ComplexRow = Eigen::Matrix<Complex, 1, Eigen::Dynamic>;

Eigen::VectorXd initial_frequencies(const VmdConfig& config, Eigen::Index length) {
  const int k = config.modes;
  Eigen::VectorXd omega = Eigen::VectorXd::Zero(k);
  switch (config.init) {
    case VmdInit::all_zero:
      break;
    case VmdInit::uniform:
      for (int i = 0; i < k; ++i) omega[i] = 0.5 / k * i;
      break;
    case VmdInit::random: {
      // Log-uniform between the lowest resolvable frequency and Nyquist.
      std::mt19937_64 rng(config.seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double lo = std::log(1.0 / static_cast<double>(length));
      for (int i = 0; i < k; ++i) omega[i] = std::exp(lo + (std::log(0.5) - lo) * unit(rng));
      std::sort(omega.begin(), omega.end());
      break;
    }
  }
  return omega;
}

}  // namespace

void VmdConfig::validate() const {
  if (modes < 1) throw ConfigError("vmd: K must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("vmd: alpha must be > 0");
  if (!(tol > 0.0)) throw ConfigError("vmd: tol must be > 0");
  if (!(tau >= 0.0)) throw ConfigError("vmd: tau must be >= 0");
  if (max_iters < 1) throw ConfigError("vmd: max_iters must be >= 1");
}

Eigen::VectorXd ImfSet::energy_shares() const {
  Eigen::VectorXd e(mode_count() + 1);
  for (Eigen::Index k = 0; k < mode_count(); ++k) e[k] = modes.row(k).squaredNorm();
  e[mode_count()] = residue.squaredNorm();
  const double total = e.sum();
  return total > 0.0 ? Eigen::VectorXd(e / total) : e;
}

ImfSet vmd_decompose(const Eigen::Ref<const Eigen::VectorXd>& signal, const VmdConfig& config) {
  config.validate();
  const Eigen::Index n = signal.size();
  if (n < 2) throw DataError("vmd_decompose: signal length must be >= 2");
  if (!signal.allFinite()) throw DataError("vmd_decompose: non-finite input");

  ImfSet out;
  if (config.modes > n / 2) {
    out.warnings.push_back("K=" + std::to_string(config.modes) + " exceeds floor(len/2)=" +
                           std::to_string(n / 2) + "; expect degenerate modes");
  }

  // Mirror extension to length 2n.
  const Eigen::Index half = n / 2;
  const Eigen::Index t_len = 2 * n;
  std::vector<double> mirrored(static_cast<std::size_t>(t_len));
  for (Eigen::Index i = 0; i < half; ++i) mirrored[i] = signal[half - 1 - i];
  for (Eigen::Index i = 0; i < n; ++i) mirrored[half + i] = signal[i];
  for (Eigen::Index i = 0; i < n - half; ++i) mirrored[half + n + i] = signal[n - 1 - i];

  Eigen::FFT<double> fft;
  std::vector<Complex> spectrum;
  fft.fwd(spectrum, mirrored);

  // Non-negative frequency bins 0..t_len/2 with Parseval weights.
  const Eigen::Index bins = t_len / 2 + 1;
  ComplexRow f_plus(bins);
  Eigen::RowVectorXd freqs(bins);
  Eigen::RowVectorXd weight = Eigen::RowVectorXd::Constant(bins, 2.0);
  weight[0] = 1.0;
  weight[bins - 1] = 1.0;
  for (Eigen::Index j = 0; j < bins; ++j) {
    f_plus[j] = spectrum[static_cast<std::size_t>(j)];
    freqs[j] = static_cast<double>(j) / static_cast<double>(t_len);
  }

  const int k_modes = config.modes;
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> u =
      Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(k_modes, bins);
  Eigen::VectorXd omega = initial_frequencies(config, n);
  ComplexRow lambda = ComplexRow::Zero(bins);
  ComplexRow u_sum = ComplexRow::Zero(bins);
  ComplexRow previous(bins);

  double delta = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < config.max_iters) {
    ++iter;
    delta = 0.0;
    for (int k = 0; k < k_modes; ++k) {
      previous = u.row(k);
      u_sum -= previous;
      const Eigen::RowVectorXd denom =
          (1.0 + 2.0 * config.alpha * (freqs.array() - omega[k]).square()).matrix();
      u.row(k) = ((f_plus - u_sum + 0.5 * lambda).array() / denom.array().cast<Complex>()).matrix();
      u_sum += u.row(k);

      const Eigen::RowVectorXd power = u.row(k).cwiseAbs2();
      const double total = power.sum();
      if (total > 0.0) omega[k] = freqs.dot(power) / total;

      const double change = (u.row(k) - previous).cwiseAbs2().dot(weight);
      const double norm = previous.cwiseAbs2().dot(weight);
      if (norm > 0.0) {
        delta += change / norm;
      } else if (change > 0.0) {
        delta = std::numeric_limits<double>::infinity();
      }
    }
    if (config.tau > 0.0) lambda += config.tau * (f_plus - u_sum);
    if (delta < config.tol) break;
  }

  // Back to the time domain through the conjugate-symmetric full spectrum, then crop.
  std::vector<int> order(static_cast<std::size_t>(k_modes));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return omega[a] < omega[b]; });

  out.modes.resize(k_modes, n);
  out.center_freqs.resize(k_modes);
  std::vector<Complex> full(static_cast<std::size_t>(t_len));
  std::vector<Complex> time;
  for (int r = 0; r < k_modes; ++r) {
    const int k = order[static_cast<std::size_t>(r)];
    for (Eigen::Index j = 0; j < bins; ++j) full[static_cast<std::size_t>(j)] = u(k, j);
    for (Eigen::Index j = 1; j < t_len / 2; ++j) full[static_cast<std::size_t>(t_len - j)] = std::conj(u(k, j));
    full[0] = full[0].real();
    full[static_cast<std::size_t>(t_len / 2)] = full[static_cast<std::size_t>(t_len / 2)].real();
    fft.inv(time, full);
    for (Eigen::Index i = 0; i < n; ++i) out.modes(r, i) = time[static_cast<std::size_t>(half + i)].real();
    out.center_freqs[r] = std::clamp(omega[k], 0.0, 0.5);
  }
  out.residue = signal - out.modes.colwise().sum().transpose();
  out.iterations_used = iter;
  out.final_delta = delta;
  return out;
}

Eigen::VectorXd vmd_reconstruct(const ImfSet& imfs) {
  if (imfs.modes.rows() > 0 && imfs.modes.cols() != imfs.residue.size()) {
    throw ShapeError("vmd_reconstruct: mode length " + std::to_string(imfs.modes.cols()) +
                     " != residue length " + std::to_string(imfs.residue.size()));
  }
  Eigen::VectorXd out = imfs.residue;
  for (Eigen::Index k = 0; k < imfs.modes.rows(); ++k) out += imfs.modes.row(k).transpose();
  return out;
}

namespace {

// Writes component `j` (modes then residue) of a decomposition into `dst`.
template <typename Dst>
void assign_component(Dst&& dst, const ImfSet& imfs, Eigen::Index j, Eigen::Index offset, Eigen::Index len) {
  if (j < imfs.mode_count()) {
    dst = imfs.modes.row(j).segment(offset, len);
  } else {
    dst = imfs.residue.segment(offset, len).transpose();
  }
}

}  // namespace

std::vector<WindowedDataset> decompose_dataset(const WindowedDataset& dataset, const VmdConfig& config,
                                               DecompositionScope scope, int workers) {
  config.validate();
  const int components = config.modes + 1;
  std::vector<WindowedDataset> out(static_cast<std::size_t>(components), dataset);
  const Eigen::Index n = dataset.size();
  const auto step = static_cast<std::int64_t>(kStepsPerDay) * kBucketSeconds;

  if (scope == DecompositionScope::per_window) {
    // Each distinct 48-step block (input of window i, target of window i) is decomposed once.
    std::map<std::int64_t, Eigen::VectorXd> blocks;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto t0 = dataset.window_start_times[static_cast<std::size_t>(i)];
      blocks.try_emplace(t0, dataset.load(i).transpose());
      blocks.try_emplace(t0 + step, dataset.targets.row(i).transpose());
    }
    std::vector<std::int64_t> keys;
    keys.reserve(blocks.size());
    for (const auto& [k, v] : blocks) keys.push_back(k);
    std::vector<ImfSet> results(keys.size());
    parallel_for(keys.size(), workers, [&](std::size_t b) { results[b] = vmd_decompose(blocks.at(keys[b]), config); });
    std::map<std::int64_t, const ImfSet*> by_time;
    for (std::size_t b = 0; b < keys.size(); ++b) by_time.emplace(keys[b], &results[b]);

    for (Eigen::Index i = 0; i < n; ++i) {
      const auto t0 = dataset.window_start_times[static_cast<std::size_t>(i)];
      const ImfSet& in = *by_time.at(t0);
      const ImfSet& tg = *by_time.at(t0 + step);
      for (int j = 0; j < components; ++j) {
        auto& d = out[static_cast<std::size_t>(j)];
        assign_component(d.inputs.row(i).segment(0, kStepsPerDay), in, j, 0, kStepsPerDay);
        assign_component(d.targets.row(i), tg, j, 0, kStepsPerDay);
      }
    }
    return out;
  }

  // Whole-series scope: contiguous runs of unit-stride windows are stitched back into one
  // series, decomposed once, and re-windowed.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> runs;  // [first, last]
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!runs.empty() && dataset.window_start_times[static_cast<std::size_t>(i)] ==
                             dataset.window_start_times[static_cast<std::size_t>(i - 1)] + kBucketSeconds) {
      runs.back().second = i;
    } else {
      runs.emplace_back(i, i);
    }
  }
  std::vector<ImfSet> results(runs.size());
  parallel_for(runs.size(), workers, [&](std::size_t r) {
    const auto [first, last] = runs[r];
    const Eigen::Index len = (last - first) + kWindowSpan;
    Eigen::VectorXd series(len);
    for (Eigen::Index t = 0; t < len; ++t) {
      const Eigen::Index w = std::min(first + t, last);
      const Eigen::Index pos = t - (w - first);
      series[t] = pos < kStepsPerDay ? dataset.inputs(w, pos) : dataset.targets(w, pos - kStepsPerDay);
    }
    results[r] = vmd_decompose(series, config);
  });
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto [first, last] = runs[r];
    for (Eigen::Index i = first; i <= last; ++i) {
      const Eigen::Index off = i - first;
      for (int j = 0; j < components; ++j) {
        auto& d = out[static_cast<std::size_t>(j)];
        assign_component(d.inputs.row(i).segment(0, kStepsPerDay), results[r], j, off, kStepsPerDay);
        assign_component(d.targets.row(i), results[r], j, off + kStepsPerDay, kStepsPerDay);
      }
    }
  }
  return out;
}

void save_imfset(const std::filesystem::path& stem, const ImfSet& imfs, const VmdConfig& config) {
  ContainerBlock block;
  block.n = static_cast<std::uint32_t>(imfs.mode_count() + 1);
  block.channels = 1;
  block.length = static_cast<std::uint32_t>(imfs.length());
  block.values.reserve(block.count());
  for (Eigen::Index k = 0; k < imfs.mode_count(); ++k) {
    for (Eigen::Index t = 0; t < imfs.length(); ++t) block.values.push_back(imfs.modes(k, t));
  }
  for (Eigen::Index t = 0; t < imfs.length(); ++t) block.values.push_back(imfs.residue[t]);
  auto bin = stem;
  bin += ".lcw";
  write_container(bin, std::span<const ContainerBlock>(&block, 1));

  nlohmann::json sidecar = {
      {"K", config.modes},
      {"alpha", config.alpha},
      {"tol", config.tol},
      {"tau", config.tau},
      {"init", to_string(config.init)},
      {"center_freqs", std::vector<double>(imfs.center_freqs.begin(), imfs.center_freqs.end())},
      {"iterations_used", imfs.iterations_used},
      {"final_delta", imfs.final_delta},
  };
  auto js = stem;
  js += ".json";
  std::ofstream(js) << sidecar.dump(2) << '\n';
}

ImfSet load_imfset(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".lcw";
  auto js = stem;
  js += ".json";
  auto blocks = read_container(bin);
  std::ifstream in(js);
  if (!in || blocks.size() != 1) throw DataError("load_imfset: missing or malformed " + stem.string());
  const auto sidecar = nlohmann::json::parse(in);
  const auto& b = blocks.front();
  const Eigen::Index k = static_cast<Eigen::Index>(b.n) - 1;
  const Eigen::Index len = b.length;
  if (k != sidecar.at("K").get<Eigen::Index>()) throw DataError("load_imfset: K mismatch in " + stem.string());
  ImfSet out;
  out.modes = Eigen::Map<const RowMatrix>(b.values.data(), k, len);
  out.residue = Eigen::Map<const Eigen::VectorXd>(b.values.data() + k * len, len);
  const auto freqs = sidecar.at("center_freqs").get<std::vector<double>>();
  out.center_freqs = Eigen::Map<const Eigen::VectorXd>(freqs.data(), static_cast<Eigen::Index>(freqs.size()));
  out.iterations_used = sidecar.at("iterations_used").get<int>();
  const auto& delta = sidecar.at("final_delta");
  out.final_delta = delta.is_number() ? delta.get<double>() : std::numeric_limits<double>::infinity();
  return out;
}

std::string to_string(VmdInit init) {
  switch (init) {
    case VmdInit::all_zero: return "zero";
    case VmdInit::uniform: return "uniform";
    case VmdInit::random: return "random";
  }
  return "zero";
}

VmdInit parse_vmd_init(const std::string& text) {
  if (text == "zero" || text == "all-zero") return VmdInit::all_zero;
  if (text == "uniform") return VmdInit::uniform;
  if (text == "random") return VmdInit::random;
  throw ConfigError("unknown VMD init mode '" + text + "'");
}

std::string to_string(DecompositionScope scope) {
  return scope == DecompositionScope::per_window ? "per-window" : "whole-series";
}

DecompositionScope parse_scope(const std::string& text) {
  if (text == "per-window") return DecompositionScope::per_window;
  if (text == "whole-series") return DecompositionScope::whole_series;
  throw ConfigError("unknown decomposition scope '" + text + "'");
}

}  // namespace vmdload
