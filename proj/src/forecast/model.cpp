#include "vmdload/forecast/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vmdload/autodiff/adam.hpp"
#include "vmdload/autodiff/checkpoint.hpp"
#include "vmdload/errors.hpp"

namespace vmdload::forecast {

std::string to_string(ForecastKind kind) {
  switch (kind) {
    case ForecastKind::mwdn_inception: return "mwdn-inception";
    case ForecastKind::historical_mean: return "historical-mean";
    case ForecastKind::plugin: return "plugin";
  }
  return "unknown";
}

std::string to_string(ModelProfile profile) {
  return profile == ModelProfile::paper_exact ? "paper-exact" : "desk-scale";
}

ModelProfile parse_profile(const std::string& text) {
  if (text == "paper-exact") return ModelProfile::paper_exact;
  if (text == "desk-scale") return ModelProfile::desk_scale;
  throw ConfigError("unknown model profile '" + text + "' (expected paper-exact or desk-scale)");
}

InceptionConfig inception_config(ModelProfile profile) {
  return profile == ModelProfile::paper_exact ? InceptionConfig::paper_exact() : InceptionConfig::desk_scale();
}

RowMatrix PluginForecaster::predict(const WindowedDataset& data) {
  RowMatrix out = fn_(data);
  if (out.rows() != data.size() || out.cols() != kStepsPerDay) {
    throw ShapeError("plugin forecaster returned " + std::to_string(out.rows()) + "x" + std::to_string(out.cols()));
  }
  return out;
}

ForecastModel::ForecastModel(const MwdnConfig& mwdn, ModelProfile profile, std::uint64_t seed)
    : ForecastModel(mwdn, inception_config(profile), seed) {}

ForecastModel::ForecastModel(const MwdnConfig& mwdn, const InceptionConfig& inception, std::uint64_t seed)
    : net_(mwdn, inception, seed, kStepsPerDay, kStepsPerDay) {}

namespace {

Tensor gather_inputs(const RowMatrix& inputs, std::span<const Eigen::Index> rows) {
  const Index width = inputs.cols();
  Eigen::ArrayXd values(static_cast<Index>(rows.size()) * width);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    values.segment(static_cast<Index>(b) * width, width) = inputs.row(rows[b]).transpose().array();
  }
  return Tensor::from({static_cast<Index>(rows.size()), kInputChannels, kStepsPerDay}, std::move(values));
}

Tensor gather_targets(const RowMatrix& targets, std::span<const Eigen::Index> rows) {
  Eigen::ArrayXd values(static_cast<Index>(rows.size()) * kStepsPerDay);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    values.segment(static_cast<Index>(b) * kStepsPerDay, kStepsPerDay) = targets.row(rows[b]).transpose().array();
  }
  return Tensor::from({static_cast<Index>(rows.size()), kStepsPerDay}, std::move(values));
}

}  // namespace

std::vector<double> ForecastModel::train(const WindowedDataset& standardized, const TrainOptions& options) {
  if (options.epochs < 0 || options.batch < 1) throw ConfigError("train: epochs must be >= 0 and batch >= 1");
  if (standardized.size() == 0) throw DataError("train: empty dataset");
  if (options.epochs == 0) return {};

  Rng rng(options.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(standardized.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto params = net_.parameters().trainable_tensors();
  ad::AdamState adam;
  adam.lr = options.lr;

  std::vector<double> curve;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(options.batch)) {
      const auto count = std::min(order.size() - first, static_cast<std::size_t>(options.batch));
      const std::span<const Eigen::Index> rows(order.data() + first, count);
      Tape tape;
      const Tensor x = gather_inputs(standardized.inputs, rows);
      const Tensor y = gather_targets(standardized.targets, rows);
      const Tensor loss = ad::mse_loss(tape, net_.forward(tape, x, BatchNormMode::train), y);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch starting at " +
                             std::to_string(first) + " (seed " + std::to_string(options.seed) + ")");
      }
      for (auto& p : params) p.zero_grad();
      tape.backward(loss);
      ad::adam_step(params, adam);
      total += value * static_cast<double>(count);
    }
    curve.push_back(total / static_cast<double>(order.size()));
  }
  loss_curve_.insert(loss_curve_.end(), curve.begin(), curve.end());
  return curve;
}

RowMatrix ForecastModel::forward_standardized(const RowMatrix& inputs, Eigen::Index chunk) {
  if (inputs.cols() != kInputChannels * kStepsPerDay) {
    throw ShapeError("forward: inputs must have " + std::to_string(kInputChannels * kStepsPerDay) + " columns");
  }
  RowMatrix out(inputs.rows(), kStepsPerDay);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index first = 0; first < inputs.rows(); first += chunk) {
    const auto count = std::min(chunk, inputs.rows() - first);
    rows.resize(static_cast<std::size_t>(count));
    std::iota(rows.begin(), rows.end(), first);
    Tape tape(false);
    const Tensor y = net_.forward(tape, gather_inputs(inputs, rows), BatchNormMode::eval);
    out.middleRows(first, count) = Eigen::Map<const RowMatrix>(y.data(), count, kStepsPerDay);
  }
  return out;
}

RowMatrix ForecastModel::predict(const WindowedDataset& data) {
  if (!standardization_) throw DataError("predict: model has no standardization attached");
  const auto scaled = standardize_dataset(data, *standardization_, Direction::forward);
  const RowMatrix out = forward_standardized(scaled.inputs);
  return standardize(out.array(), standardization_->load, Direction::inverse).matrix();
}

nlohmann::json to_json(const StandardizationParams& params) {
  return {{"mean", params.mean}, {"std", params.std}, {"degenerate", params.degenerate}};
}

StandardizationParams standardization_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>(), j.value("degenerate", false)};
}

namespace {

std::string to_string(MwdnPooling pooling) {
  return pooling == MwdnPooling::halving ? "halving" : "length-preserving";
}

MwdnPooling parse_pooling(const std::string& text) {
  if (text == "halving") return MwdnPooling::halving;
  if (text == "length-preserving") return MwdnPooling::length_preserving;
  throw ConfigError("unknown mwdn pooling '" + text + "'");
}

}  // namespace

void ForecastModel::save(const std::filesystem::path& dir, const nlohmann::json& extra) const {
  const auto& m = net_.mwdn_config();
  const auto& c = net_.inception_config();
  nlohmann::json meta = extra;
  meta["mwdn"] = {{"levels", m.levels},
                  {"wavelet", forecast::to_string(m.wavelet)},
                  {"noise_scale", m.noise_scale},
                  {"test_linear_mode", m.test_linear_mode},
                  {"pooling", to_string(m.pooling)}};
  meta["inception"] = {{"modules", c.modules},     {"filters", c.filters},
                       {"kernels", c.kernels},     {"bottleneck", c.bottleneck},
                       {"residual_every", c.residual_every}, {"bn_momentum", c.bn_momentum}};
  meta["seed"] = net_.seed();
  meta["loss_curve"] = loss_curve_;
  if (standardization_) {
    meta["standardization"] = {{"load", to_json(standardization_->load)},
                               {"hour", to_json(standardization_->hour)},
                               {"day", to_json(standardization_->day)}};
  }
  ad::save_checkpoint(dir, net_.parameters().all(), meta);
}

ForecastModel ForecastModel::load(const std::filesystem::path& dir, nlohmann::json* meta_out) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("missing checkpoint manifest in " + dir.string());
  const auto meta = nlohmann::json::parse(in).at("meta");

  MwdnConfig m;
  const auto& jm = meta.at("mwdn");
  m.levels = jm.at("levels").get<int>();
  m.wavelet = parse_wavelet(jm.at("wavelet").get<std::string>());
  m.noise_scale = jm.at("noise_scale").get<double>();
  m.test_linear_mode = jm.at("test_linear_mode").get<bool>();
  m.pooling = parse_pooling(jm.at("pooling").get<std::string>());
  InceptionConfig c;
  const auto& jc = meta.at("inception");
  c.modules = jc.at("modules").get<int>();
  c.filters = jc.at("filters").get<int>();
  c.kernels = jc.at("kernels").get<std::array<int, 3>>();
  c.bottleneck = jc.at("bottleneck").get<int>();
  c.residual_every = jc.at("residual_every").get<int>();
  c.bn_momentum = jc.at("bn_momentum").get<double>();

  ForecastModel model(m, c, meta.at("seed").get<std::uint64_t>());
  auto tensors = model.net_.parameters().all();
  ad::load_checkpoint(dir, tensors);
  model.loss_curve_ = meta.value("loss_curve", std::vector<double>{});
  if (meta.contains("standardization")) {
    const auto& js = meta.at("standardization");
    model.standardization_ = DatasetStandardization{standardization_from_json(js.at("load")),
                                                    standardization_from_json(js.at("hour")),
                                                    standardization_from_json(js.at("day"))};
  }
  if (meta_out) *meta_out = meta;
  return model;
}

RowMatrix sum_forecasts(std::span<const RowMatrix> forecasts) {
  if (forecasts.empty()) throw ShapeError("sum_forecasts: no forecasts");
  RowMatrix total = forecasts.front();
  for (std::size_t i = 1; i < forecasts.size(); ++i) {
    if (forecasts[i].rows() != total.rows() || forecasts[i].cols() != total.cols()) {
      throw ShapeError("sum_forecasts: forecast " + std::to_string(i) + " has a different shape");
    }
    total += forecasts[i];
  }
  return total;
}

}  // namespace vmdload::forecast
