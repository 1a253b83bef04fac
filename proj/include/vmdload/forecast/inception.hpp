#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "vmdload/autodiff/checkpoint.hpp"
#include "vmdload/autodiff/ops.hpp"

namespace vmdload::forecast {

using ad::BatchNormMode;
using ad::Index;
using ad::NamedTensor;
using ad::Tape;
using ad::Tensor;
using Rng = std::mt19937_64;

struct InceptionConfig {
  int modules = 6;
  int filters = 32;                       // per branch; module output is 4 * filters
  std::array<int, 3> kernels{39, 19, 9};
  int bottleneck = 32;
  int residual_every = 3;
  double bn_momentum = 0.1;

  static InceptionConfig paper_exact() { return {}; }
  static InceptionConfig desk_scale() { return {2, 8, {9, 5, 3}, 8, 3, 0.1}; }

  int embedding_size() const { return 4 * filters; }
  void validate() const;
};

/// Parameters and buffers of a model, by dotted name.
struct ParameterSet {
  std::vector<NamedTensor> trainable;
  std::vector<NamedTensor> buffers;

  std::vector<Tensor> trainable_tensors() const;
  /// Trainable then buffers, the checkpoint order.
  std::vector<NamedTensor> all() const;
};

/// U(-bound, bound) initialised tensor.
Tensor uniform_tensor(ad::Shape shape, double bound, Rng& rng, bool requires_grad = true);

struct BatchNorm1d {
  Tensor gamma, beta, running_mean, running_var;
  double momentum = 0.1;

  BatchNorm1d() = default;
  BatchNorm1d(Index channels, double momentum);
  Tensor operator()(Tape& tape, const Tensor& x, BatchNormMode mode);
  void collect(ParameterSet& out, const std::string& prefix) const;
};

/// Bottleneck 1x1 conv, three parallel same-padded convs, and a max-pool(3,1) + 1x1 conv
/// branch, concatenated, batch-normalised and passed through ReLU.
class InceptionModule {
 public:
  InceptionModule(Index in_channels, const InceptionConfig& config, Rng& rng);
  Tensor forward(Tape& tape, const Tensor& x, BatchNormMode mode);
  void collect(ParameterSet& out, const std::string& prefix) const;

 private:
  Tensor bottleneck_;  // undefined when in_channels == 1
  std::array<Tensor, 3> branches_;
  Tensor pool_conv_;
  BatchNorm1d bn_;
};

/// Stack of inception modules with a residual shortcut closing every `residual_every`
/// modules, then global average pooling to a [B, 4F] embedding.
class InceptionTime {
 public:
  InceptionTime(Index in_channels, const InceptionConfig& config, Rng& rng);
  Tensor forward(Tape& tape, const Tensor& x, BatchNormMode mode);
  Index embedding_size() const { return embedding_; }
  void collect(ParameterSet& out, const std::string& prefix) const;

 private:
  struct Shortcut {
    Tensor conv;  // undefined when channel counts already match
    BatchNorm1d bn;
  };
  std::vector<InceptionModule> modules_;
  std::vector<Shortcut> shortcuts_;
  int residual_every_;
  Index embedding_;
};

}  // namespace vmdload::forecast
