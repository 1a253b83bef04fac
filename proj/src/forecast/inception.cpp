#include "vmdload/forecast/inception.hpp"

#include <cmath>

#include "vmdload/errors.hpp"

namespace vmdload::forecast {

void InceptionConfig::validate() const {
  if (modules < 1) throw ConfigError("inception: module count must be >= 1");
  if (filters < 1 || bottleneck < 1) throw ConfigError("inception: filters and bottleneck must be >= 1");
  for (int k : kernels) {
    if (k < 1 || k % 2 == 0) throw ConfigError("inception: kernel sizes must be odd and positive");
  }
  if (residual_every < 1) throw ConfigError("inception: residual_every must be >= 1");
}

std::vector<Tensor> ParameterSet::trainable_tensors() const {
  std::vector<Tensor> out;
  out.reserve(trainable.size());
  for (const auto& p : trainable) out.push_back(p.tensor);
  return out;
}

std::vector<NamedTensor> ParameterSet::all() const {
  std::vector<NamedTensor> out = trainable;
  out.insert(out.end(), buffers.begin(), buffers.end());
  return out;
}

Tensor uniform_tensor(ad::Shape shape, double bound, Rng& rng, bool requires_grad) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::ArrayXd values(ad::numel(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::from(std::move(shape), std::move(values), requires_grad);
}

namespace {

Tensor conv_weight(Index out_channels, Index in_channels, Index width, Rng& rng) {
  return uniform_tensor({out_channels, in_channels, width}, std::sqrt(1.0 / static_cast<double>(in_channels * width)), rng);
}

}  // namespace

BatchNorm1d::BatchNorm1d(Index channels, double momentum_)
    : gamma(Tensor::from({channels}, Eigen::ArrayXd::Ones(channels), true)),
      beta(Tensor::zeros({channels}, true)),
      running_mean(Tensor::zeros({channels})),
      running_var(Tensor::from({channels}, Eigen::ArrayXd::Ones(channels))),
      momentum(momentum_) {}

Tensor BatchNorm1d::operator()(Tape& tape, const Tensor& x, BatchNormMode mode) {
  return ad::batch_norm1d(tape, x, gamma, beta, running_mean, running_var, momentum, mode);
}

void BatchNorm1d::collect(ParameterSet& out, const std::string& prefix) const {
  out.trainable.push_back({prefix + ".gamma", gamma});
  out.trainable.push_back({prefix + ".beta", beta});
  out.buffers.push_back({prefix + ".running_mean", running_mean});
  out.buffers.push_back({prefix + ".running_var", running_var});
}

InceptionModule::InceptionModule(Index in_channels, const InceptionConfig& config, Rng& rng) {
  Index branch_in = in_channels;
  if (in_channels > 1) {
    bottleneck_ = conv_weight(config.bottleneck, in_channels, 1, rng);
    branch_in = config.bottleneck;
  }
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    branches_[i] = conv_weight(config.filters, branch_in, config.kernels[i], rng);
  }
  pool_conv_ = conv_weight(config.filters, in_channels, 1, rng);
  bn_ = BatchNorm1d(4 * config.filters, config.bn_momentum);
}

Tensor InceptionModule::forward(Tape& tape, const Tensor& x, BatchNormMode mode) {
  const Tensor none;
  const Tensor squeezed = bottleneck_.defined() ? ad::conv1d(tape, x, bottleneck_, none, 1, ad::Padding::same) : x;
  std::array<Tensor, 4> parts;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    parts[i] = ad::conv1d(tape, squeezed, branches_[i], none, 1, ad::Padding::same);
  }
  parts[3] = ad::conv1d(tape, ad::max_pool1d(tape, x, 3, 1, 1), pool_conv_, none, 1, ad::Padding::same);
  return ad::relu(tape, bn_(tape, ad::concat(tape, parts, 1), mode));
}

void InceptionModule::collect(ParameterSet& out, const std::string& prefix) const {
  if (bottleneck_.defined()) out.trainable.push_back({prefix + ".bottleneck", bottleneck_});
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    out.trainable.push_back({prefix + ".conv" + std::to_string(i), branches_[i]});
  }
  out.trainable.push_back({prefix + ".pool_conv", pool_conv_});
  bn_.collect(out, prefix + ".bn");
}

InceptionTime::InceptionTime(Index in_channels, const InceptionConfig& config, Rng& rng)
    : residual_every_(config.residual_every), embedding_(config.embedding_size()) {
  config.validate();
  Index channels = in_channels;
  Index residual_in = in_channels;
  for (int d = 0; d < config.modules; ++d) {
    modules_.emplace_back(channels, config, rng);
    channels = embedding_;
    if (d % residual_every_ == residual_every_ - 1) {
      Shortcut s;
      if (residual_in != embedding_) s.conv = conv_weight(embedding_, residual_in, 1, rng);
      s.bn = BatchNorm1d(embedding_, config.bn_momentum);
      shortcuts_.push_back(std::move(s));
      residual_in = embedding_;
    }
  }
}

Tensor InceptionTime::forward(Tape& tape, const Tensor& x, BatchNormMode mode) {
  Tensor h = x;
  Tensor residual = x;
  std::size_t next_shortcut = 0;
  for (std::size_t d = 0; d < modules_.size(); ++d) {
    h = modules_[d].forward(tape, h, mode);
    if (static_cast<int>(d) % residual_every_ == residual_every_ - 1) {
      auto& s = shortcuts_[next_shortcut++];
      Tensor projected = s.conv.defined() ? ad::conv1d(tape, residual, s.conv, Tensor{}, 1, ad::Padding::same) : residual;
      h = ad::relu(tape, ad::add(tape, h, s.bn(tape, projected, mode)));
      residual = h;
    }
  }
  return ad::global_avg_pool1d(tape, h);
}

void InceptionTime::collect(ParameterSet& out, const std::string& prefix) const {
  for (std::size_t d = 0; d < modules_.size(); ++d) modules_[d].collect(out, prefix + ".module" + std::to_string(d));
  for (std::size_t i = 0; i < shortcuts_.size(); ++i) {
    const auto p = prefix + ".shortcut" + std::to_string(i);
    if (shortcuts_[i].conv.defined()) out.trainable.push_back({p + ".conv", shortcuts_[i].conv});
    shortcuts_[i].bn.collect(out, p + ".bn");
  }
}

}  // namespace vmdload::forecast
