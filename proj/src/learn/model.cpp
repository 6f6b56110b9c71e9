#include "olive/learn/model.hpp"

#include <cmath>

#include "olive/error.hpp"

namespace olive {

void check_training_data(const Matrix& x, std::span<const double> y) {
  if (x.rows() < 2) throw DataError("training needs at least 2 rows");
  if (y.size() != x.rows()) throw DataError("feature rows and targets differ in length");
  if (x.cols() == 0) throw DataError("training needs at least one feature");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("feature matrix contains a non-finite value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("targets contain a non-finite value");
  }
}

TrainedModel::TrainedModel(ModelConfig config, std::size_t feature_count, Impl impl,
                           TrainingMetadata metadata)
    : config_(std::move(config)),
      feature_count_(feature_count),
      impl_(std::move(impl)),
      metadata_(std::move(metadata)) {}

double TrainedModel::predict_row(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw DataError("model expects " + std::to_string(feature_count_) + " features, got " +
                    std::to_string(x.size()));
  }
  return std::visit([&](const auto& m) { return m.predict(x); }, impl_);
}

std::vector<double> TrainedModel::predict(const Matrix& rows) const {
  if (rows.cols() != feature_count_ && rows.rows() > 0) {
    throw DataError("model expects " + std::to_string(feature_count_) + " features, got " +
                    std::to_string(rows.cols()));
  }
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    out[r] = std::visit([&](const auto& m) { return m.predict(rows.row(r)); }, impl_);
  }
  return out;
}

namespace {

nlohmann::json trees_to_json(const std::vector<RegressionTree>& trees) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : trees) out.push_back(t.to_json());
  return out;
}

std::vector<RegressionTree> trees_from_json(const nlohmann::json& j) {
  std::vector<RegressionTree> trees;
  for (const auto& t : j) trees.push_back(RegressionTree::from_json(t));
  return trees;
}

}  // namespace

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json j = {
      {"format_version", 1},
      {"family", to_string(config_.family)},
      {"hyperparameters", config_.hyperparameters},
      {"seed", config_.seed},
      {"feature_count", feature_count_},
      {"rounds_used", metadata_.rounds_used},
      {"validation_loss", metadata_.validation_loss},
  };
  if (const auto* forest = std::get_if<ForestModel>(&impl_)) {
    j["trees"] = trees_to_json(forest->trees);
  } else if (const auto* gbm = std::get_if<GbmModel>(&impl_)) {
    j["base"] = gbm->base;
    j["learning_rate"] = gbm->learning_rate;
    j["trees"] = trees_to_json(gbm->trees);
  } else {
    const auto& mlp = std::get<MlpModel>(impl_);
    j["network"] = mlp.network.to_json();
    j["x_mean"] = mlp.x_mean;
    j["x_scale"] = mlp.x_scale;
    j["y_mean"] = mlp.y_mean;
    j["y_scale"] = mlp.y_scale;
  }
  return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != 1) throw DataError("unsupported model format_version");
    const ModelConfig config = ModelConfig::make(
        parse_family(j.at("family").get<std::string>()),
        j.at("hyperparameters").get<std::map<std::string, double>>(),
        j.at("seed").get<std::uint64_t>());
    const auto features = j.at("feature_count").get<std::size_t>();
    TrainingMetadata meta{j.at("rounds_used").get<std::size_t>(),
                          j.at("validation_loss").get<std::vector<double>>()};
    if (is_forest(config.family)) {
      ForestModel forest{trees_from_json(j.at("trees"))};
      if (forest.trees.empty()) throw DataError("forest model has no trees");
      return TrainedModel(config, features, std::move(forest), std::move(meta));
    }
    if (is_gbm(config.family)) {
      GbmModel gbm{j.at("base").get<double>(), j.at("learning_rate").get<double>(),
                   trees_from_json(j.at("trees"))};
      return TrainedModel(config, features, std::move(gbm), std::move(meta));
    }
    MlpModel mlp{MlpNetwork::from_json(j.at("network")), j.at("x_mean").get<std::vector<double>>(),
                 j.at("x_scale").get<std::vector<double>>(), j.at("y_mean").get<double>(),
                 j.at("y_scale").get<double>()};
    if (mlp.network.architecture().inputs != features || mlp.x_mean.size() != features ||
        mlp.x_scale.size() != features) {
      throw DataError("network input width does not match feature_count");
    }
    return TrainedModel(config, features, std::move(mlp), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

TrainedModel fit_model(const Matrix& x, std::span<const double> y, const ModelConfig& config) {
  if (is_forest(config.family)) return fit_tree_ensemble(x, y, config);
  if (is_gbm(config.family)) return fit_gbm(x, y, config);
  return fit_mlp(x, y, config);
}

TrainedModel fit_model(const FeatureTable& table, const ModelConfig& config) {
  return fit_model(table.features(), table.targets(), config);
}

std::vector<double> predict(const TrainedModel& model, const Matrix& rows) {
  return model.predict(rows);
}

}  // namespace olive
