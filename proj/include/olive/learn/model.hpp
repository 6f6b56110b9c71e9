#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "olive/features.hpp"
#include "olive/learn/config.hpp"
#include "olive/learn/mlp.hpp"
#include "olive/learn/tree.hpp"
#include "olive/matrix.hpp"

namespace olive {

struct TrainingMetadata {
  std::size_t rounds_used = 0;             // trees, boosting rounds or epochs
  std::vector<double> validation_loss;     // RMSE per round/epoch, when early stopping ran

  bool operator==(const TrainingMetadata&) const = default;
};

struct ForestModel {
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;
  bool operator==(const ForestModel&) const = default;
};

struct GbmModel {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const { return predict(x, trees.size()); }
  // base + sum of the first `rounds` scaled trees, accumulated in round order.
  double predict(std::span<const double> x, std::size_t rounds) const;
  bool operator==(const GbmModel&) const = default;
};

struct MlpModel {
  MlpNetwork network{MlpArchitecture{1, {}, false}};
  std::vector<double> x_mean, x_scale;
  double y_mean = 0.0;
  double y_scale = 1.0;

  double predict(std::span<const double> x) const;
  bool operator==(const MlpModel&) const = default;
};

/// A fitted learner. Immutable; prediction is deterministic.
class TrainedModel {
 public:
  using Impl = std::variant<ForestModel, GbmModel, MlpModel>;

  TrainedModel(ModelConfig config, std::size_t feature_count, Impl impl,
               TrainingMetadata metadata);

  Family family() const noexcept { return config_.family; }
  const ModelConfig& config() const noexcept { return config_; }
  std::size_t feature_count() const noexcept { return feature_count_; }
  const TrainingMetadata& metadata() const noexcept { return metadata_; }
  const Impl& impl() const noexcept { return impl_; }

  double predict_row(std::span<const double> x) const;
  // Throws DataError unless rows.cols() == feature_count().
  std::vector<double> predict(const Matrix& rows) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);

  bool operator==(const TrainedModel&) const = default;

 private:
  ModelConfig config_;
  std::size_t feature_count_;
  Impl impl_;
  TrainingMetadata metadata_;
};

/// Called after every boosting round of the final fit with the training
/// residuals (target minus running prediction), indexed like the input rows.
using GbmRoundCallback = std::function<void(std::size_t round, std::span<const double> residuals)>;

TrainedModel fit_tree_ensemble(const Matrix& x, std::span<const double> y,
                               const ModelConfig& config);
TrainedModel fit_gbm(const Matrix& x, std::span<const double> y, const ModelConfig& config,
                     const GbmRoundCallback& on_round = {});
TrainedModel fit_mlp(const Matrix& x, std::span<const double> y, const ModelConfig& config);

// Dispatches on config.family.
TrainedModel fit_model(const Matrix& x, std::span<const double> y, const ModelConfig& config);
TrainedModel fit_model(const FeatureTable& table, const ModelConfig& config);

std::vector<double> predict(const TrainedModel& model, const Matrix& rows);

// Throws DataError on fewer than 2 rows, a length mismatch or non-finite values.
void check_training_data(const Matrix& x, std::span<const double> y);

}  // namespace olive
