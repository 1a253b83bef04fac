#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vmdload/forecast/inception.hpp"
#include "vmdload/forecast/wavelet.hpp"

namespace vmdload::forecast {

/// `halving`: average pooling kernel 2 stride 2 (lengths halve per level).
/// `length_preserving`: average pooling kernel 3 stride 1 padding 1.
enum class MwdnPooling { halving, length_preserving };

struct MwdnConfig {
  int levels = 4;  // I
  Wavelet wavelet = Wavelet::db4;
  double noise_scale = 0.01;
  bool test_linear_mode = false;  // sigma replaced by the identity
  MwdnPooling pooling = MwdnPooling::halving;

  void validate() const;
};

/// Learnable filter pair of one decomposition level, acting on sequences of `length`.
struct WaveletLevel {
  Tensor w_low, b_low, w_high, b_high;

  /// Shifted-row filter matrices plus uniform noise of magnitude
  /// noise_scale * mean|coefficient|; zero biases.
  static WaveletLevel init(Index length, const MwdnConfig& config, Rng& rng);
  Index length() const { return w_low.dim(0); }
};

struct LevelOutput {
  Tensor approx;     // e^l, pooled
  Tensor detail;     // e^h, pooled
  Tensor pre_low;    // W^l x + b^l (before activation and pooling)
  Tensor pre_high;
};

/// One mWDN level on x[B, L]: a = sigma(W x + b) for the low and high branch, then pooled.
LevelOutput mwdn_layer(Tape& tape, const Tensor& x, const WaveletLevel& level, bool linear,
                       MwdnPooling pooling = MwdnPooling::halving);

/// Multilevel cascade. Inputs whose length is odd before a halving level are zero-padded
/// on the right by one sample.
class MwdnCascade {
 public:
  MwdnCascade() = default;
  MwdnCascade(Index input_length, const MwdnConfig& config, Rng& rng);

  struct Output {
    std::vector<Tensor> details;  // e^h(1..I)
    Tensor approx;                // e^l(I)
    std::vector<LevelOutput> levels;
  };
  Output forward(Tape& tape, const Tensor& x) const;

  /// Lengths entering each level (after any padding).
  const std::vector<Index>& level_lengths() const { return lengths_; }
  const std::vector<bool>& padded() const { return padded_; }
  const std::vector<WaveletLevel>& levels() const { return levels_; }
  void collect(ParameterSet& out, const std::string& prefix) const;

 private:
  MwdnConfig config_;
  std::vector<WaveletLevel> levels_;
  std::vector<Index> lengths_;
  std::vector<bool> padded_;
};

/// mWDN front-end feeding I+1 InceptionTime sub-models (details 1..I and the final
/// approximation), each with the hour/day channels pooled to its length; the concatenated
/// embeddings go through one dense layer to the 48-step horizon.
class MwdnInceptionNet {
 public:
  MwdnInceptionNet(const MwdnConfig& mwdn, const InceptionConfig& inception, std::uint64_t seed,
                   Index input_length = 48, Index horizon = 48);

  /// x[B, 3, L] -> [B, horizon].
  Tensor forward(Tape& tape, const Tensor& x, BatchNormMode mode);

  const ParameterSet& parameters() const { return params_; }
  const MwdnCascade& cascade() const { return cascade_; }
  std::size_t submodel_count() const { return submodels_.size(); }
  const MwdnConfig& mwdn_config() const { return mwdn_; }
  const InceptionConfig& inception_config() const { return inception_; }
  std::uint64_t seed() const { return seed_; }

 private:
  /// Hour/day channels [B, 2, L] pooled through the same length schedule as the cascade.
  std::vector<Tensor> time_pyramid(Tape& tape, const Tensor& time) const;

  MwdnConfig mwdn_;
  InceptionConfig inception_;
  std::uint64_t seed_;
  Index input_length_;
  Index horizon_;
  MwdnCascade cascade_;
  std::vector<InceptionTime> submodels_;
  Tensor head_weight_, head_bias_;
  ParameterSet params_;
};

}  // namespace vmdload::forecast
