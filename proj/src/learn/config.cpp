#include "olive/learn/config.hpp"

#include <cmath>

#include "olive/error.hpp"

namespace olive {

namespace {

constexpr double kBig = 1e9;

constexpr HyperparameterSpec kForest[] = {
    {"n_trees", 300, 1, 100000, true},
    {"max_depth", 16, 1, 64, true},
    {"min_samples_leaf", 2, 1, kBig, true},
    {"max_features", 0, 0, kBig, true},
    {"bootstrap", 1, 0, 1, true},
};

constexpr HyperparameterSpec kGbmLevel[] = {
    {"n_rounds", 300, 0, 100000, true},
    {"learning_rate", 0.1, 0, 1, false, true},
    {"max_depth", 6, 1, 32, true},
    {"min_samples_leaf", 1, 1, kBig, true},
    {"l2", 1.0, 0, kBig, false},
    {"patience", 30, 0, 100000, true},
    {"validation_fraction", 0.2, 0.05, 0.5, false},
};

constexpr HyperparameterSpec kGbmLeaf[] = {
    {"n_rounds", 300, 0, 100000, true},
    {"learning_rate", 0.1, 0, 1, false, true},
    {"num_leaves", 31, 2, 65536, true},
    {"min_samples_leaf", 2, 1, kBig, true},
    {"l2", 0.0, 0, kBig, false},
    {"max_bins", 255, 2, 255, true},
    {"patience", 30, 0, 100000, true},
    {"validation_fraction", 0.2, 0.05, 0.5, false},
};

constexpr HyperparameterSpec kGbmSymmetric[] = {
    {"n_rounds", 300, 0, 100000, true},
    {"learning_rate", 0.1, 0, 1, false, true},
    {"max_depth", 6, 1, 16, true},
    {"l2", 3.0, 0, kBig, false},
    {"max_bins", 255, 2, 255, true},
    {"patience", 30, 0, 100000, true},
    {"validation_fraction", 0.2, 0.05, 0.5, false},
};

constexpr HyperparameterSpec kMlp[] = {
    {"epochs", 500, 1, 1000000, true},
    {"batch_size", 32, 1, 1000000, true},
    {"learning_rate", 1e-3, 0, 1, false, true},
    {"patience", 20, 0, 1000000, true},
    {"validation_fraction", 0.2, 0.05, 0.5, false},
};

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::random_forest: return "random_forest";
    case Family::extra_trees: return "extra_trees";
    case Family::gbm_level: return "gbm_level";
    case Family::gbm_leaf: return "gbm_leaf";
    case Family::gbm_symmetric: return "gbm_symmetric";
    case Family::mlp_a: return "mlp_a";
    case Family::mlp_b: return "mlp_b";
  }
  return "unknown";
}

Family parse_family(std::string_view text) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == text) return f;
  }
  throw ConfigError("unknown model family '" + std::string(text) + "'");
}

bool is_forest(Family f) { return f == Family::random_forest || f == Family::extra_trees; }
bool is_gbm(Family f) {
  return f == Family::gbm_level || f == Family::gbm_leaf || f == Family::gbm_symmetric;
}
bool is_mlp(Family f) { return f == Family::mlp_a || f == Family::mlp_b; }

std::span<const HyperparameterSpec> hyperparameter_specs(Family family) {
  switch (family) {
    case Family::random_forest:
    case Family::extra_trees: return kForest;
    case Family::gbm_level: return kGbmLevel;
    case Family::gbm_leaf: return kGbmLeaf;
    case Family::gbm_symmetric: return kGbmSymmetric;
    case Family::mlp_a:
    case Family::mlp_b: return kMlp;
  }
  return {};
}

ModelConfig ModelConfig::make(Family family, const std::map<std::string, double>& overrides,
                              std::uint64_t seed) {
  ModelConfig config;
  config.family = family;
  config.seed = seed;
  for (const auto& spec : hyperparameter_specs(family)) {
    config.hyperparameters.emplace(std::string(spec.name), spec.default_value);
  }
  for (const auto& [key, value] : overrides) {
    auto it = config.hyperparameters.find(key);
    if (it == config.hyperparameters.end()) {
      throw ConfigError("unknown hyperparameter '" + key + "' for " +
                        std::string(to_string(family)));
    }
    it->second = value;
  }
  config.validate();
  return config;
}

double ModelConfig::get(std::string_view key) const {
  auto it = hyperparameters.find(std::string(key));
  if (it == hyperparameters.end()) {
    throw ConfigError("hyperparameter '" + std::string(key) + "' not set");
  }
  return it->second;
}

std::size_t ModelConfig::get_count(std::string_view key) const {
  return static_cast<std::size_t>(get(key));
}

void ModelConfig::validate() const {
  const auto specs = hyperparameter_specs(family);
  if (hyperparameters.size() != specs.size()) {
    throw ConfigError("hyperparameter set does not match family " +
                      std::string(to_string(family)));
  }
  for (const auto& spec : specs) {
    const std::string name(spec.name);
    auto it = hyperparameters.find(name);
    if (it == hyperparameters.end()) throw ConfigError("missing hyperparameter '" + name + "'");
    const double v = it->second;
    const bool below = spec.exclusive_min ? !(v > spec.min) : !(v >= spec.min);
    if (!std::isfinite(v) || below || v > spec.max) {
      throw ConfigError(std::string(to_string(family)) + ": hyperparameter '" + name +
                        "' out of range");
    }
    if (spec.integer && std::floor(v) != v) {
      throw ConfigError(std::string(to_string(family)) + ": hyperparameter '" + name +
                        "' must be an integer");
    }
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"family", to_string(family)}, {"hyperparameters", hyperparameters}, {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    std::map<std::string, double> hp;
    if (j.contains("hyperparameters")) hp = j.at("hyperparameters").get<std::map<std::string, double>>();
    const std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
    return make(parse_family(j.at("family").get<std::string>()), hp, seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
}

}  // namespace olive
