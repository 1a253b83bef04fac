#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmdload/load_data.hpp"
#include "vmdload/forecast/mwdn.hpp"

namespace vmdload::forecast {

enum class ForecastKind { mwdn_inception, historical_mean, plugin };
std::string to_string(ForecastKind kind);

enum class ModelProfile { paper_exact, desk_scale };
std::string to_string(ModelProfile profile);
ModelProfile parse_profile(const std::string& text);
InceptionConfig inception_config(ModelProfile profile);

struct TrainOptions {
  int epochs = 30;
  int batch = 64;
  double lr = 0.002;
  std::uint64_t seed = 0;  // shuffling; weights are seeded at construction
};

/// Anything mapping watt-space windows to N x 48 watt forecasts.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual ForecastKind kind() const = 0;
  virtual RowMatrix predict(const WindowedDataset& data) = 0;
};

/// Wraps a callable; used for stub models and external predictors.
class PluginForecaster final : public Forecaster {
 public:
  using Fn = std::function<RowMatrix(const WindowedDataset&)>;
  explicit PluginForecaster(Fn fn) : fn_(std::move(fn)) {}
  ForecastKind kind() const override { return ForecastKind::plugin; }
  RowMatrix predict(const WindowedDataset& data) override;

 private:
  Fn fn_;
};

/// mWDN(InceptionTime) network together with the standardization of its training data.
class ForecastModel final : public Forecaster {
 public:
  ForecastModel(const MwdnConfig& mwdn, ModelProfile profile, std::uint64_t seed);
  ForecastModel(const MwdnConfig& mwdn, const InceptionConfig& inception, std::uint64_t seed);

  ForecastKind kind() const override { return ForecastKind::mwdn_inception; }

  void attach_standardization(const DatasetStandardization& params) { standardization_ = params; }
  const std::optional<DatasetStandardization>& standardization() const { return standardization_; }

  /// Mini-batch Adam on MSE over an already standardized dataset. Returns the per-epoch
  /// mean training loss. A non-finite loss aborts with NumericalError.
  std::vector<double> train(const WindowedDataset& standardized, const TrainOptions& options);

  /// Eval-mode forward pass on standardized inputs; standardized outputs.
  RowMatrix forward_standardized(const RowMatrix& inputs, Eigen::Index chunk = 256);

  /// Watt-space inputs -> watt-space forecasts. Requires attached standardization.
  RowMatrix predict(const WindowedDataset& data) override;

  /// Checkpoint with all parameters and batch-norm buffers; `extra` is stored in the meta.
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object()) const;
  /// Rebuilds a model from a checkpoint written by save(). `meta_out` receives the stored meta.
  static ForecastModel load(const std::filesystem::path& dir, nlohmann::json* meta_out = nullptr);

  MwdnInceptionNet& net() { return net_; }
  const MwdnInceptionNet& net() const { return net_; }
  const std::vector<double>& loss_curve() const { return loss_curve_; }

 private:
  MwdnInceptionNet net_;
  std::optional<DatasetStandardization> standardization_;
  std::vector<double> loss_curve_;
};

/// Elementwise watt-space sum of per-IMF forecasts.
RowMatrix sum_forecasts(std::span<const RowMatrix> forecasts);

nlohmann::json to_json(const StandardizationParams& params);
StandardizationParams standardization_from_json(const nlohmann::json& j);

}  // namespace vmdload::forecast
