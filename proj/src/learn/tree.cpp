#include "olive/learn/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "olive/error.hpp"

namespace olive {

namespace {
constexpr double kMinGain = 1e-12;
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw DataError("tree needs at least one node");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (std::int32_t i = 0; i < n; ++i) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.feature < 0) continue;
    // Children always come after their parent, which rules out cycles.
    if (node.left <= i || node.right <= i || node.left >= n || node.right >= n) {
      throw DataError("tree node has invalid child indices");
    }
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.feature < 0; }));
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes_[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

nlohmann::json RegressionTree::to_json() const {
  nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 left = nlohmann::json::array(), right = nlohmann::json::array(),
                 value = nlohmann::json::array();
  for (const auto& n : nodes_) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<std::int32_t>>();
  const auto right = j.at("right").get<std::vector<std::int32_t>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
    throw DataError("tree arrays differ in length");
  }
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
  }
  return RegressionTree(std::move(nodes));
}

// ---------------------------------------------------------------------------
// CART

namespace {

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
  bool found = false;
};

// sum / (n + l2). Without shrinkage the mean is taken as an offset from the
// first value, which is exact when every target is equal.
double leaf_value(std::span<const double> target, std::span<const std::size_t> rows, double sum,
                  double l2) {
  if (l2 > 0.0) return sum / (static_cast<double>(rows.size()) + l2);
  if (rows.empty()) return 0.0;
  const double first = target[rows.front()];
  double offset = 0.0;
  for (std::size_t r : rows) offset += target[r] - first;
  return first + offset / static_cast<double>(rows.size());
}

class CartBuilder {
 public:
  CartBuilder(const Matrix& x, std::span<const double> target, const CartParams& params,
              Rng& rng)
      : x_(x), target_(target), params_(params), rng_(rng), features_(x.cols()) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  std::vector<TreeNode> build(std::vector<std::size_t>& rows) {
    grow(rows, 0, rows.size(), 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                    std::size_t depth) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += target_[rows[i]];
    nodes_.back().value = leaf_value(target_, std::span<const std::size_t>(rows).subspan(begin, end - begin), sum, params_.l2);

    if (depth >= params_.max_depth || end - begin < 2 * params_.min_samples_leaf) return index;
    const Split split = find_split(rows, begin, end, sum);
    if (!split.found) return index;

    auto mid_it = std::partition(
        rows.begin() + static_cast<std::ptrdiff_t>(begin),
        rows.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t r) { return x_(r, split.feature) <= split.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - rows.begin());

    const std::int32_t left = grow(rows, begin, mid, depth + 1);
    const std::int32_t right = grow(rows, mid, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  std::span<const std::size_t> candidate_features() {
    const std::size_t p = features_.size();
    const std::size_t k = params_.max_features == 0 ? p : std::min(params_.max_features, p);
    if (k == p) {
      std::iota(features_.begin(), features_.end(), std::size_t{0});
      return features_;
    }
    // Partial Fisher-Yates over a fresh identity permutation.
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(features_[i], features_[i + rng_.below(p - i)]);
    }
    std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(k));
    return std::span<const std::size_t>(features_).first(k);
  }

  Split find_split(const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                   double sum) {
    Split best;
    const std::size_t n = end - begin;
    const auto min_leaf = params_.min_samples_leaf;
    for (std::size_t f : candidate_features()) {
      if (params_.random_thresholds) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = begin; i < end; ++i) {
          lo = std::min(lo, x_(rows[i], f));
          hi = std::max(hi, x_(rows[i], f));
        }
        if (!(lo < hi)) continue;
        double threshold = rng_.uniform(lo, hi);
        if (threshold >= hi) threshold = lo;
        double sum_l = 0.0;
        std::size_t n_l = 0;
        for (std::size_t i = begin; i < end; ++i) {
          if (x_(rows[i], f) <= threshold) {
            sum_l += target_[rows[i]];
            ++n_l;
          }
        }
        if (n_l < min_leaf || n - n_l < min_leaf) continue;
        const double gain = split_gain(sum_l, static_cast<double>(n_l), sum - sum_l,
                                       static_cast<double>(n - n_l), params_.l2);
        if (gain > kMinGain && gain > best.gain) best = {f, threshold, gain, true};
        continue;
      }

      order_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        order_.emplace_back(x_(rows[i], f), target_[rows[i]]);
      }
      std::sort(order_.begin(), order_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double sum_l = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        sum_l += order_[i].second;
        const std::size_t n_l = i + 1;
        if (order_[i].first == order_[i + 1].first) continue;
        if (n_l < min_leaf) continue;
        if (n - n_l < min_leaf) break;
        const double gain = split_gain(sum_l, static_cast<double>(n_l), sum - sum_l,
                                       static_cast<double>(n - n_l), params_.l2);
        if (gain > kMinGain && gain > best.gain) {
          double threshold = 0.5 * (order_[i].first + order_[i + 1].first);
          // Midpoint can round up to the right value for adjacent doubles.
          if (!(threshold < order_[i + 1].first)) threshold = order_[i].first;
          best = {f, threshold, gain, true};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> target_;
  const CartParams& params_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, double>> order_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree build_cart_tree(const Matrix& x, std::span<const double> target,
                               std::vector<std::size_t> rows, const CartParams& params,
                               Rng& rng) {
  if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
  CartBuilder builder(x, target, params, rng);
  return RegressionTree(builder.build(rows));
}

// ---------------------------------------------------------------------------
// Binned features

FeatureBins::FeatureBins(const Matrix& x, std::span<const std::size_t> fit_rows,
                         std::size_t max_bins)
    : thresholds_(x.cols()), codes_(x.rows() * x.cols()) {
  if (max_bins < 2 || max_bins > 65535) throw ConfigError("max_bins must be within 2..65535");
  if (fit_rows.empty()) throw DataError("cannot bin features on zero rows");
  std::vector<double> values(fit_rows.size());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < fit_rows.size(); ++i) values[i] = x(fit_rows[i], f);
    std::sort(values.begin(), values.end());
    auto& cuts = thresholds_[f];
    std::vector<double> distinct(values.begin(), std::unique(values.begin(), values.end()));
    if (distinct.size() <= max_bins) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        double t = 0.5 * (distinct[i] + distinct[i + 1]);
        if (!(t < distinct[i + 1])) t = distinct[i];
        cuts.push_back(t);
      }
    } else {
      // Equal-frequency cuts, each moved up to the next distinct value.
      for (std::size_t i = 0; i < fit_rows.size(); ++i) values[i] = x(fit_rows[i], f);
      std::sort(values.begin(), values.end());
      const std::size_t n = values.size();
      for (std::size_t q = 1; q < max_bins; ++q) {
        const double below = values[std::max<std::size_t>(q * n / max_bins, 1) - 1];
        auto next = std::upper_bound(distinct.begin(), distinct.end(), below);
        if (next == distinct.end()) break;
        double t = 0.5 * (below + *next);
        if (!(t < *next)) t = below;
        if (cuts.empty() || t > cuts.back()) cuts.push_back(t);
      }
    }
    max_bin_count_ = std::max(max_bin_count_, cuts.size() + 1);
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t f = 0; f < x.cols(); ++f) {
      const auto& cuts = thresholds_[f];
      codes_[r * x.cols() + f] = static_cast<std::uint16_t>(
          std::lower_bound(cuts.begin(), cuts.end(), x(r, f)) - cuts.begin());
    }
  }
}

namespace {

struct HistBin {
  double sum = 0.0;
  double count = 0.0;
};

struct BinSplit {
  std::size_t feature = 0;
  std::size_t bin = 0;
  double gain = 0.0;
  bool found = false;
};

// Best (feature, bin) split for one set of rows.
BinSplit best_binned_split(const FeatureBins& bins, std::span<const double> target,
                           std::span<const std::size_t> rows, std::size_t min_leaf,
                           double l2, std::vector<HistBin>& hist) {
  BinSplit best;
  double sum = 0.0;
  for (std::size_t r : rows) sum += target[r];
  const auto n = static_cast<double>(rows.size());
  for (std::size_t f = 0; f < bins.features(); ++f) {
    const std::size_t nb = bins.bin_count(f);
    if (nb < 2) continue;
    hist.assign(nb, {});
    for (std::size_t r : rows) {
      auto& h = hist[bins.code(r, f)];
      h.sum += target[r];
      h.count += 1.0;
    }
    double sum_l = 0.0, n_l = 0.0;
    for (std::size_t b = 0; b + 1 < nb; ++b) {
      sum_l += hist[b].sum;
      n_l += hist[b].count;
      if (n_l < static_cast<double>(min_leaf)) continue;
      if (n - n_l < static_cast<double>(min_leaf)) break;
      if (hist[b].count == 0.0) continue;
      const double gain = split_gain(sum_l, n_l, sum - sum_l, n - n_l, l2);
      if (gain > kMinGain && gain > best.gain) best = {f, b, gain, true};
    }
  }
  return best;
}

}  // namespace

RegressionTree build_leafwise_tree(const FeatureBins& bins, std::span<const double> target,
                                   std::span<const std::size_t> rows,
                                   const LeafWiseParams& params) {
  if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
  struct Leaf {
    std::size_t node;
    std::vector<std::size_t> rows;
    BinSplit split;
  };
  std::vector<TreeNode> nodes;
  std::vector<Leaf> leaves;
  std::vector<HistBin> hist;

  auto make_leaf = [&](std::vector<std::size_t> leaf_rows) {
    double sum = 0.0;
    for (std::size_t r : leaf_rows) sum += target[r];
    TreeNode node;
    node.value = leaf_value(target, leaf_rows, sum, params.l2);
    nodes.push_back(node);
    Leaf leaf{nodes.size() - 1, std::move(leaf_rows), {}};
    leaf.split = best_binned_split(bins, target, leaf.rows, params.min_samples_leaf, params.l2, hist);
    leaves.push_back(std::move(leaf));
  };
  make_leaf(std::vector<std::size_t>(rows.begin(), rows.end()));

  while (leaves.size() < params.num_leaves) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].split.found) continue;
      if (pick == leaves.size() || leaves[i].split.gain > leaves[pick].split.gain) pick = i;
    }
    if (pick == leaves.size()) break;
    Leaf parent = std::move(leaves[pick]);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : parent.rows) {
      (bins.code(r, parent.split.feature) <= parent.split.bin ? left_rows : right_rows).push_back(r);
    }
    const auto left = static_cast<std::int32_t>(nodes.size());
    make_leaf(std::move(left_rows));
    const auto right = static_cast<std::int32_t>(nodes.size());
    make_leaf(std::move(right_rows));
    auto& node = nodes[parent.node];
    node.feature = static_cast<std::int32_t>(parent.split.feature);
    node.threshold = bins.threshold(parent.split.feature, parent.split.bin);
    node.left = left;
    node.right = right;
  }
  return RegressionTree(std::move(nodes));
}

RegressionTree build_oblivious_tree(const FeatureBins& bins, std::span<const double> target,
                                    std::span<const std::size_t> rows,
                                    const ObliviousParams& params) {
  if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
  std::vector<std::size_t> leaf_of(rows.size(), 0);
  std::vector<std::pair<std::size_t, double>> levels;  // (feature, threshold)
  std::size_t leaf_count = 1;
  const std::size_t p = bins.features();
  const std::size_t max_bins = bins.max_bin_count();
  std::vector<HistBin> hist;
  std::vector<HistBin> totals;

  for (std::size_t depth = 0; depth < params.depth; ++depth) {
    // hist[(leaf * p + f) * max_bins + bin]
    hist.assign(leaf_count * p * max_bins, {});
    totals.assign(leaf_count, {});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t r = rows[i];
      const std::size_t leaf = leaf_of[i];
      totals[leaf].sum += target[r];
      totals[leaf].count += 1.0;
      for (std::size_t f = 0; f < p; ++f) {
        auto& h = hist[(leaf * p + f) * max_bins + bins.code(r, f)];
        h.sum += target[r];
        h.count += 1.0;
      }
    }
    double best_gain = kMinGain;
    std::size_t best_f = 0, best_b = 0;
    bool found = false;
    std::vector<double> sum_l(leaf_count), n_l(leaf_count);
    for (std::size_t f = 0; f < p; ++f) {
      const std::size_t nb = bins.bin_count(f);
      std::fill(sum_l.begin(), sum_l.end(), 0.0);
      std::fill(n_l.begin(), n_l.end(), 0.0);
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        double gain = 0.0;
        for (std::size_t leaf = 0; leaf < leaf_count; ++leaf) {
          const auto& h = hist[(leaf * p + f) * max_bins + b];
          sum_l[leaf] += h.sum;
          n_l[leaf] += h.count;
          const auto& t = totals[leaf];
          if (t.count == 0.0) continue;
          gain += split_gain(sum_l[leaf], n_l[leaf], t.sum - sum_l[leaf], t.count - n_l[leaf],
                             params.l2);
        }
        if (gain > best_gain) {
          best_gain = gain;
          best_f = f;
          best_b = b;
          found = true;
        }
      }
    }
    if (!found) break;
    levels.emplace_back(best_f, bins.threshold(best_f, best_b));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      leaf_of[i] = leaf_of[i] * 2 + (bins.code(rows[i], best_f) > best_b ? 1 : 0);
    }
    leaf_count *= 2;
  }

  std::vector<double> sums(leaf_count, 0.0), counts(leaf_count, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sums[leaf_of[i]] += target[rows[i]];
    counts[leaf_of[i]] += 1.0;
  }

  // Expand into the generic node layout, depth-first.
  std::vector<TreeNode> nodes;
  auto emit = [&](auto&& self, std::size_t depth, std::size_t leaf) -> std::int32_t {
    const auto index = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    if (depth == levels.size()) {
      const double denom = counts[leaf] + params.l2;
      nodes[static_cast<std::size_t>(index)].value = denom > 0.0 ? sums[leaf] / denom : 0.0;
      return index;
    }
    const std::int32_t left = self(self, depth + 1, leaf * 2);
    const std::int32_t right = self(self, depth + 1, leaf * 2 + 1);
    auto& node = nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(levels[depth].first);
    node.threshold = levels[depth].second;
    node.left = left;
    node.right = right;
    return index;
  };
  emit(emit, 0, 0);
  return RegressionTree(std::move(nodes));
}

}  // namespace olive
