#include <algorithm>
#include <cmath>
#include <numeric>

#include "olive/error.hpp"
#include "olive/learn/model.hpp"
#include "olive/random.hpp"

namespace olive {

double ForestModel::predict(std::span<const double> x) const {
  if (trees.empty()) return 0.0;
  const double first = trees.front().predict(x);
  double offset = 0.0;
  for (const auto& tree : trees) offset += tree.predict(x) - first;
  return first + offset / static_cast<double>(trees.size());
}

TrainedModel fit_tree_ensemble(const Matrix& x, std::span<const double> y,
                               const ModelConfig& config) {
  config.validate();
  if (!is_forest(config.family)) throw ConfigError("fit_tree_ensemble needs a forest family");
  check_training_data(x, y);

  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  CartParams params;
  params.max_depth = config.get_count("max_depth");
  params.min_samples_leaf = config.get_count("min_samples_leaf");
  params.max_features = config.get_count("max_features");
  if (params.max_features == 0) {
    params.max_features = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(p)))));
  }
  params.random_thresholds = config.family == Family::extra_trees;
  const bool bootstrap = config.get("bootstrap") != 0.0;
  const std::size_t n_trees = config.get_count("n_trees");

  ForestModel forest;
  forest.trees.reserve(n_trees);
  std::vector<std::size_t> rows(n);
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(config.seed, t));
    if (bootstrap) {
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees.push_back(build_cart_tree(x, y, rows, params, rng));
  }
  TrainingMetadata meta;
  meta.rounds_used = n_trees;
  return TrainedModel(config, p, std::move(forest), std::move(meta));
}

}  // namespace olive
