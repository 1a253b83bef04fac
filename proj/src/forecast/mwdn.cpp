#include "vmdload/forecast/mwdn.hpp"

#include <cmath>
#include <numeric>

#include "vmdload/errors.hpp"

namespace vmdload::forecast {

void MwdnConfig::validate() const {
  if (levels < 1) throw ConfigError("mwdn: levels must be >= 1");
  if (noise_scale < 0.0) throw ConfigError("mwdn: noise_scale must be >= 0");
}

WaveletLevel WaveletLevel::init(Index length, const MwdnConfig& config, Rng& rng) {
  const auto& filters = analysis_filters(config.wavelet);
  auto make = [&](const std::array<double, 8>& taps) {
    const double mean_abs =
        std::accumulate(taps.begin(), taps.end(), 0.0, [](double a, double b) { return a + std::abs(b); }) /
        static_cast<double>(taps.size());
    const double magnitude = config.noise_scale * mean_abs;
    Eigen::MatrixXd m = shifted_filter_matrix(taps, length);
    if (magnitude > 0.0) {
      std::uniform_real_distribution<double> noise(-magnitude, magnitude);
      for (Index r = 0; r < length; ++r) {
        for (Index c = 0; c < length; ++c) m(r, c) += noise(rng);
      }
    }
    // Row-major storage for the [out, in] weight layout.
    Eigen::ArrayXd values(length * length);
    for (Index r = 0; r < length; ++r) {
      for (Index c = 0; c < length; ++c) values[r * length + c] = m(r, c);
    }
    return Tensor::from({length, length}, std::move(values), true);
  };
  WaveletLevel level;
  level.w_low = make(filters.low);
  level.b_low = Tensor::zeros({length}, true);
  level.w_high = make(filters.high);
  level.b_high = Tensor::zeros({length}, true);
  return level;
}

namespace {

Tensor pool(Tape& tape, const Tensor& x, MwdnPooling pooling) {
  return pooling == MwdnPooling::halving ? ad::avg_pool1d(tape, x, 2, 2) : ad::avg_pool1d(tape, x, 3, 1, 1);
}

}  // namespace

LevelOutput mwdn_layer(Tape& tape, const Tensor& x, const WaveletLevel& level, bool linear, MwdnPooling pooling) {
  if (x.rank() != 2 || x.dim(1) != level.length()) {
    throw ShapeError("mwdn_layer: input " + ad::to_string(x.shape()) + " does not match level length " +
                     std::to_string(level.length()));
  }
  if (pooling == MwdnPooling::halving && x.dim(1) % 2 != 0) {
    throw ShapeError("mwdn_layer: odd input length " + std::to_string(x.dim(1)));
  }
  LevelOutput out;
  out.pre_low = ad::dense(tape, x, level.w_low, level.b_low);
  out.pre_high = ad::dense(tape, x, level.w_high, level.b_high);
  const Tensor low = linear ? ad::identity(tape, out.pre_low) : ad::sigmoid(tape, out.pre_low);
  const Tensor high = linear ? ad::identity(tape, out.pre_high) : ad::sigmoid(tape, out.pre_high);
  out.approx = pool(tape, low, pooling);
  out.detail = pool(tape, high, pooling);
  return out;
}

MwdnCascade::MwdnCascade(Index input_length, const MwdnConfig& config, Rng& rng) : config_(config) {
  config.validate();
  Index length = input_length;
  for (int i = 0; i < config.levels; ++i) {
    const bool pad = config.pooling == MwdnPooling::halving && length % 2 != 0;
    if (pad) ++length;
    padded_.push_back(pad);
    lengths_.push_back(length);
    levels_.push_back(WaveletLevel::init(length, config, rng));
    if (config.pooling == MwdnPooling::halving) length /= 2;
  }
}

MwdnCascade::Output MwdnCascade::forward(Tape& tape, const Tensor& x) const {
  Output out;
  Tensor current = x;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (padded_[i]) current = ad::pad1d(tape, current, 0, 1);
    auto level = mwdn_layer(tape, current, levels_[i], config_.test_linear_mode, config_.pooling);
    out.details.push_back(level.detail);
    current = level.approx;
    out.levels.push_back(std::move(level));
  }
  out.approx = current;
  return out;
}

void MwdnCascade::collect(ParameterSet& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const auto p = prefix + ".level" + std::to_string(i + 1);
    out.trainable.push_back({p + ".w_low", levels_[i].w_low});
    out.trainable.push_back({p + ".b_low", levels_[i].b_low});
    out.trainable.push_back({p + ".w_high", levels_[i].w_high});
    out.trainable.push_back({p + ".b_high", levels_[i].b_high});
  }
}

MwdnInceptionNet::MwdnInceptionNet(const MwdnConfig& mwdn, const InceptionConfig& inception, std::uint64_t seed,
                                   Index input_length, Index horizon)
    : mwdn_(mwdn), inception_(inception), seed_(seed), input_length_(input_length), horizon_(horizon) {
  inception.validate();
  Rng rng(seed);
  cascade_ = MwdnCascade(input_length, mwdn, rng);
  for (int i = 0; i <= mwdn.levels; ++i) submodels_.emplace_back(3, inception, rng);
  const Index features = static_cast<Index>(submodels_.size()) * inception.embedding_size();
  const double bound = std::sqrt(1.0 / static_cast<double>(features));
  head_weight_ = uniform_tensor({horizon, features}, bound, rng);
  head_bias_ = uniform_tensor({horizon}, bound, rng);

  cascade_.collect(params_, "mwdn");
  for (std::size_t i = 0; i < submodels_.size(); ++i) submodels_[i].collect(params_, "inception" + std::to_string(i));
  params_.trainable.push_back({"head.weight", head_weight_});
  params_.trainable.push_back({"head.bias", head_bias_});
}

std::vector<Tensor> MwdnInceptionNet::time_pyramid(Tape& tape, const Tensor& time) const {
  std::vector<Tensor> out;
  Tensor current = time;
  for (std::size_t i = 0; i < cascade_.level_lengths().size(); ++i) {
    if (cascade_.padded()[i]) current = ad::pad1d(tape, current, 0, 1);
    current = pool(tape, current, mwdn_.pooling);
    out.push_back(current);
  }
  return out;
}

Tensor MwdnInceptionNet::forward(Tape& tape, const Tensor& x, BatchNormMode mode) {
  if (x.rank() != 3 || x.dim(1) != 3 || x.dim(2) != input_length_) {
    throw ShapeError("mwdn forward: expected [B,3," + std::to_string(input_length_) + "], got " +
                     ad::to_string(x.shape()));
  }
  const Index batch = x.dim(0);
  const Tensor load = ad::reshape(tape, ad::narrow(tape, x, 1, 0, 1), {batch, input_length_});
  const Tensor time = ad::narrow(tape, x, 1, 1, 2);
  const auto decomposition = cascade_.forward(tape, load);
  const auto times = time_pyramid(tape, time);

  std::vector<Tensor> embeddings;
  auto run = [&](std::size_t model, const Tensor& sequence, const Tensor& t) {
    const Tensor seq = ad::reshape(tape, sequence, {batch, 1, sequence.dim(1)});
    const std::array<Tensor, 2> parts{seq, t};
    embeddings.push_back(submodels_[model].forward(tape, ad::concat(tape, parts, 1), mode));
  };
  for (std::size_t i = 0; i < decomposition.details.size(); ++i) run(i, decomposition.details[i], times[i]);
  run(decomposition.details.size(), decomposition.approx, times.back());
  return ad::dense(tape, ad::concat(tape, embeddings, 1), head_weight_, head_bias_);
}

}  // namespace vmdload::forecast
