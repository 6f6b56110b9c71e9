#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "olive/features.hpp"
#include "olive/learn/stack.hpp"
#include "olive/metrics.hpp"

namespace olive {

struct CvOptions {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  R2Mode r2_mode = R2Mode::determination;
  std::size_t importance_repeats = 5;
  bool compute_importance = true;
  // Folds run concurrently when > 1; output is identical either way.
  std::size_t threads = 1;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n = 0;
  double r2 = 0.0;  // in the report's r2_mode
  double r2_determination = 0.0;
  double r2_pearson_sq = 0.0;
  double rmse = 0.0;
};

struct HeldOutPrediction {
  std::string id;
  double actual = 0.0;
  double estimated = 0.0;
  std::size_t fold = 0;
};

struct EvalReport {
  std::vector<FoldResult> per_fold;
  double mean_r2 = 0.0;
  double mean_r2_determination = 0.0;
  double mean_r2_pearson_sq = 0.0;
  double mean_rmse = 0.0;
  std::vector<double> importance;  // aligned with kFeatureNames; empty if not computed
  std::vector<HeldOutPrediction> predictions;  // ordered by fold, then row
  std::uint64_t seed = 0;
  std::size_t k = 0;
  R2Mode r2_mode = R2Mode::determination;
  nlohmann::json config;  // resolved stack spec and options

  nlohmann::json to_json() const;
};

/// Fold f fits fit_stack on the other folds with seed derive_seed(seed, f)
/// and scores the held-out rows. Importance is measured per fold on the
/// held-out rows and averaged over folds.
EvalReport cross_validate(const FeatureTable& table, const StackSpec& spec,
                          const CvOptions& options);

/// Per-feature RMSE increase under seeded column shuffles, averaged over
/// repeats, negatives clamped to 0, normalized to sum 1 (uniform if all 0).
std::vector<double> permutation_importance(const StackEnsemble& ensemble, const Matrix& x,
                                           std::span<const double> y, std::size_t repeats,
                                           std::uint64_t seed);
std::vector<double> permutation_importance(const StackEnsemble& ensemble,
                                           const FeatureTable& table, std::size_t repeats,
                                           std::uint64_t seed);

/// Raw (unnormalized) mean RMSE increases, one per column.
std::vector<double> permutation_increases(const StackEnsemble& ensemble, const Matrix& x,
                                          std::span<const double> y, std::size_t repeats,
                                          std::uint64_t seed);

/// Clamps negatives to 0 and normalizes to shares.
std::vector<double> normalize_importance(std::vector<double> raw);

struct ScatterAnnotation {
  double r2 = 0.0;
  double rmse = 0.0;
  std::string r2_label = "R²";
};

/// Estimated (y) against actual (x) yield with a 1:1 line over the data range.
std::string render_scatter(std::span<const double> estimates, std::span<const double> actuals,
                           const ScatterAnnotation& note);
void emit_scatter(std::span<const double> estimates, std::span<const double> actuals,
                  const std::filesystem::path& path, const ScatterAnnotation& note);

void write_predictions_csv(std::span<const HeldOutPrediction> rows,
                           const std::filesystem::path& path);

}  // namespace olive
