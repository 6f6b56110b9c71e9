#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace olive {

enum class Family {
  random_forest,
  extra_trees,
  gbm_level,      // depth-limited level-wise trees, exact splits
  gbm_leaf,       // best-leaf-first trees on binned features
  gbm_symmetric,  // oblivious trees: one shared split per depth level
  mlp_a,          // 2 hidden layers (64, 32), ReLU
  mlp_b,          // 3 hidden layers (128, 64, 32), ReLU, layer-normalized inputs
};

inline constexpr std::array<Family, 7> kAllFamilies = {
    Family::random_forest, Family::extra_trees, Family::gbm_level, Family::gbm_leaf,
    Family::gbm_symmetric, Family::mlp_a,       Family::mlp_b};

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

bool is_forest(Family f);
bool is_gbm(Family f);
bool is_mlp(Family f);

struct HyperparameterSpec {
  std::string_view name;
  double default_value;
  double min;
  double max;
  bool integer;
  bool exclusive_min = false;
};

std::span<const HyperparameterSpec> hyperparameter_specs(Family family);

/// One learner family with fully resolved hyperparameters.
///
/// Forest keys: n_trees, max_depth, min_samples_leaf, max_features
/// (0 = round(sqrt(features))), bootstrap.
/// GBM keys: n_rounds, learning_rate, max_depth (level/symmetric),
/// num_leaves (leaf), min_samples_leaf, l2, max_bins (leaf/symmetric),
/// patience (0 disables early stopping), validation_fraction.
/// MLP keys: epochs, batch_size, learning_rate, patience, validation_fraction.
struct ModelConfig {
  Family family = Family::random_forest;
  std::map<std::string, double> hyperparameters;
  std::uint64_t seed = 0;

  // Defaults for `family` overridden by `overrides`; throws ConfigError on an
  // unknown key or out-of-range value.
  static ModelConfig make(Family family, const std::map<std::string, double>& overrides = {},
                          std::uint64_t seed = 0);

  double get(std::string_view key) const;
  std::size_t get_count(std::string_view key) const;
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace olive
