#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "olive/features.hpp"
#include "olive/learn/config.hpp"
#include "olive/learn/model.hpp"
#include "olive/matrix.hpp"

namespace olive {

struct OofResult {
  std::vector<double> oof;                 // aligned to input rows
  std::vector<TrainedModel> fold_models;   // fold_models[f] never saw folds[f]
  std::vector<std::vector<std::size_t>> folds;
};

/// Out-of-fold predictions over an explicit partition. Fold model f is fit
/// with seed derive_seed(config.seed, f).
OofResult out_of_fold_predict(const Matrix& x, std::span<const double> y,
                              const ModelConfig& config,
                              std::span<const std::vector<std::size_t>> folds);

/// Same, with folds from kfold_split(rows, k, seed).
OofResult out_of_fold_predict(const Matrix& x, std::span<const double> y,
                              const ModelConfig& config, std::size_t k, std::uint64_t seed);

/// Forward selection with replacement: each step adds the candidate whose
/// inclusion minimizes the RMSE of the count-weighted average; stops after
/// `iterations` steps or when no addition strictly improves. `candidates` is
/// one prediction vector per candidate. Returns weights (counts / total).
std::vector<double> greedy_weighted_ensemble(std::span<const std::vector<double>> candidates,
                                             std::span<const double> targets,
                                             std::size_t iterations);

/// sum_j weights[j] * candidates[j][i], accumulated in candidate order.
std::vector<double> blend(std::span<const std::vector<double>> candidates,
                          std::span<const double> weights);

struct StackSpec {
  std::vector<std::vector<ModelConfig>> layers;
  std::size_t k = 5;
  std::size_t ensemble_iterations = 100;
  // Random-search configurations per member, scored by oof RMSE; 0 = off.
  std::size_t tuning_budget = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static StackSpec from_json(const nlohmann::json& j);
};

/// Layer 1: all seven families. Layer 2: gbm_leaf, random_forest, mlp_a.
StackSpec default_stack_spec();

struct StackMember {
  std::string name;                        // e.g. "L1/gbm_leaf"
  ModelConfig config;
  std::vector<TrainedModel> fold_models;
};

/// Fitted multi-layer stack. Immutable and safe to share for prediction.
class StackEnsemble {
 public:
  StackEnsemble(std::vector<std::vector<StackMember>> layers, std::vector<double> meta_weights,
                std::size_t k, std::uint64_t seed, std::size_t feature_count);

  const std::vector<std::vector<StackMember>>& layers() const noexcept { return layers_; }
  const std::vector<double>& meta_weights() const noexcept { return meta_weights_; }
  std::size_t k() const noexcept { return k_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t feature_count() const noexcept { return feature_count_; }

  /// Averages each member's fold models, feeds layer outputs forward as extra
  /// columns, and blends the final layer with the meta weights.
  std::vector<double> predict(const Matrix& rows) const;

  nlohmann::json to_json() const;
  static StackEnsemble from_json(const nlohmann::json& j);

 private:
  std::vector<std::vector<StackMember>> layers_;
  std::vector<double> meta_weights_;
  std::size_t k_;
  std::uint64_t seed_;
  std::size_t feature_count_;
};

struct MemberScore {
  std::string name;
  std::size_t layer = 0;  // 1-based
  double oof_rmse = 0.0;
};

struct TrainReport {
  std::vector<MemberScore> members;
  std::vector<std::string> ensemble_members;  // final-layer names, aligned with weights
  std::vector<double> weights;
  double ensemble_oof_rmse = 0.0;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;

  // Omits wall-clock time unless asked, so reports stay byte-reproducible.
  nlohmann::json to_json(bool include_timing = false) const;
};

/// Fits every layer with shared folds kfold_split(n, k, derive_seed(seed,
/// "stack-folds")); member seeds derive from (seed, layer, index).
std::pair<StackEnsemble, TrainReport> fit_stack(const Matrix& x, std::span<const double> y,
                                                const StackSpec& spec, std::uint64_t seed);
std::pair<StackEnsemble, TrainReport> fit_stack(const FeatureTable& table,
                                                const StackSpec& spec, std::uint64_t seed);

/// Seeded random search over a family's hyperparameter space. Candidate 0 is
/// `base`; returns the candidate with the lowest oof RMSE and its oof result.
std::pair<ModelConfig, OofResult> tune_member(const Matrix& x, std::span<const double> y,
                                              const ModelConfig& base,
                                              std::span<const std::vector<std::size_t>> folds,
                                              std::size_t budget, std::uint64_t seed);

}  // namespace olive
