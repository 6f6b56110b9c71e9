#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "olive/matrix.hpp"
#include "olive/random.hpp"

namespace olive {

// Rows with x[feature] <= threshold descend left. Leaves have feature == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

/// Binary regression tree in a flat node array; node 0 is the root.
class RegressionTree {
 public:
  RegressionTree() : nodes_(1) {}
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  // {"feature": [...], "threshold": [...], "left": [...], "right": [...], "value": [...]}
  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

/// Split gain of partitioning (sum, count) into left/right under L2 shrinkage.
/// Empty sides contribute nothing.
inline double split_gain(double sum_l, double n_l, double sum_r, double n_r, double l2) {
  auto score = [l2](double s, double n) { return n + l2 > 0.0 ? s * s / (n + l2) : 0.0; };
  return score(sum_l, n_l) + score(sum_r, n_r) - score(sum_l + sum_r, n_l + n_r);
}

struct CartParams {
  std::size_t max_depth = 16;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = all features at every node
  bool random_thresholds = false;
  double l2 = 0.0;
};

/// Depth-first CART on `rows` (duplicates allowed, as produced by bootstrap).
/// Exact mode scans midpoints between consecutive distinct values; random mode
/// draws one threshold per candidate feature uniformly in its node range.
/// Leaves hold sum / (count + l2).
RegressionTree build_cart_tree(const Matrix& x, std::span<const double> target,
                               std::vector<std::size_t> rows, const CartParams& params,
                               Rng& rng);

/// Quantile bin boundaries per feature, fitted on training rows, and the bin
/// code of every row of the matrix. Bin b holds values <= upper(f, b).
class FeatureBins {
 public:
  FeatureBins(const Matrix& x, std::span<const std::size_t> fit_rows, std::size_t max_bins);

  std::size_t features() const noexcept { return thresholds_.size(); }
  std::size_t bin_count(std::size_t f) const noexcept { return thresholds_[f].size() + 1; }
  std::size_t max_bin_count() const noexcept { return max_bin_count_; }
  double threshold(std::size_t f, std::size_t b) const { return thresholds_[f][b]; }
  std::uint16_t code(std::size_t row, std::size_t f) const {
    return codes_[row * thresholds_.size() + f];
  }

 private:
  std::vector<std::vector<double>> thresholds_;
  std::vector<std::uint16_t> codes_;
  std::size_t max_bin_count_ = 1;
};

struct LeafWiseParams {
  std::size_t num_leaves = 31;
  std::size_t min_samples_leaf = 1;
  double l2 = 0.0;
};

/// Best-first growth: repeatedly splits the leaf with the largest gain until
/// `num_leaves` leaves exist or no split gains.
RegressionTree build_leafwise_tree(const FeatureBins& bins, std::span<const double> target,
                                   std::span<const std::size_t> rows,
                                   const LeafWiseParams& params);

struct ObliviousParams {
  std::size_t depth = 6;
  double l2 = 0.0;
};

/// Oblivious tree: each depth level applies one (feature, threshold) chosen to
/// maximize the summed gain over all current leaves.
RegressionTree build_oblivious_tree(const FeatureBins& bins, std::span<const double> target,
                                    std::span<const std::size_t> rows,
                                    const ObliviousParams& params);

}  // namespace olive
