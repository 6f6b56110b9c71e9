#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "olive/error.hpp"
#include "olive/learn/model.hpp"
#include "olive/random.hpp"

namespace olive {

double GbmModel::predict(std::span<const double> x, std::size_t rounds) const {
  double f = base;
  const std::size_t n = std::min(rounds, trees.size());
  for (std::size_t t = 0; t < n; ++t) f += learning_rate * trees[t].predict(x);
  return f;
}

namespace {

struct BoostResult {
  GbmModel model;
  std::vector<double> validation_rmse;  // index t = after t rounds
  std::size_t best_rounds = 0;
};

RegressionTree grow(const ModelConfig& config, const Matrix& x, const FeatureBins* bins,
                    std::span<const double> residual, std::span<const std::size_t> rows) {
  switch (config.family) {
    case Family::gbm_level: {
      CartParams p;
      p.max_depth = config.get_count("max_depth");
      p.min_samples_leaf = config.get_count("min_samples_leaf");
      p.l2 = config.get("l2");
      Rng unused(0);
      return build_cart_tree(x, residual, std::vector<std::size_t>(rows.begin(), rows.end()), p,
                             unused);
    }
    case Family::gbm_leaf: {
      LeafWiseParams p;
      p.num_leaves = config.get_count("num_leaves");
      p.min_samples_leaf = config.get_count("min_samples_leaf");
      p.l2 = config.get("l2");
      return build_leafwise_tree(*bins, residual, rows, p);
    }
    case Family::gbm_symmetric: {
      ObliviousParams p;
      p.depth = config.get_count("max_depth");
      p.l2 = config.get("l2");
      return build_oblivious_tree(*bins, residual, rows, p);
    }
    default: throw ConfigError("not a boosting family");
  }
}

// Stagewise squared-loss boosting on `train` rows. When `valid` is non-empty,
// stops once validation RMSE has not improved for `patience` rounds.
BoostResult boost(const ModelConfig& config, const Matrix& x, std::span<const double> y,
                  std::span<const std::size_t> train, std::span<const std::size_t> valid,
                  std::size_t rounds, std::size_t patience, const GbmRoundCallback& on_round) {
  std::optional<FeatureBins> bins;
  if (config.family != Family::gbm_level) bins.emplace(x, train, config.get_count("max_bins"));

  BoostResult out;
  out.model.learning_rate = config.get("learning_rate");
  // Offset from the first target keeps a constant target exact.
  const double first = y[train.front()];
  double offset = 0.0;
  for (std::size_t r : train) offset += y[r] - first;
  out.model.base = first + offset / static_cast<double>(train.size());

  // Running prediction and residual, indexed by matrix row.
  std::vector<double> f(x.rows(), out.model.base);
  std::vector<double> residual(x.rows(), 0.0);
  for (std::size_t r : train) residual[r] = y[r] - f[r];

  auto valid_rmse = [&] {
    double s = 0.0;
    for (std::size_t r : valid) s += (y[r] - f[r]) * (y[r] - f[r]);
    return std::sqrt(s / static_cast<double>(valid.size()));
  };
  double best = std::numeric_limits<double>::infinity();
  if (!valid.empty()) {
    best = valid_rmse();
    out.validation_rmse.push_back(best);
  }

  for (std::size_t t = 0; t < rounds; ++t) {
    out.model.trees.push_back(grow(config, x, bins ? &*bins : nullptr, residual, train));
    const RegressionTree& tree = out.model.trees.back();
    for (std::size_t r : train) {
      f[r] += out.model.learning_rate * tree.predict(x.row(r));
      residual[r] = y[r] - f[r];
    }
    if (on_round) on_round(t + 1, residual);
    if (valid.empty()) continue;
    for (std::size_t r : valid) f[r] += out.model.learning_rate * tree.predict(x.row(r));
    const double score = valid_rmse();
    out.validation_rmse.push_back(score);
    if (score < best) {
      best = score;
      out.best_rounds = t + 1;
    } else if (t + 1 - out.best_rounds >= patience) {
      break;
    }
  }
  if (valid.empty()) out.best_rounds = out.model.trees.size();
  return out;
}

}  // namespace

TrainedModel fit_gbm(const Matrix& x, std::span<const double> y, const ModelConfig& config,
                     const GbmRoundCallback& on_round) {
  config.validate();
  if (!is_gbm(config.family)) throw ConfigError("fit_gbm needs a boosting family");
  check_training_data(x, y);

  const std::size_t n = x.rows();
  std::size_t rounds = config.get_count("n_rounds");
  const std::size_t patience = config.get_count("patience");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  TrainingMetadata meta;
  // Early stopping picks the round count on a held-out slice; the final model
  // is then refit on every row for that many rounds.
  const auto n_valid = static_cast<std::size_t>(
      std::floor(config.get("validation_fraction") * static_cast<double>(n)));
  if (patience > 0 && rounds > 0 && n_valid >= 2 && n - n_valid >= 2) {
    std::vector<std::size_t> order = all;
    Rng rng(derive_seed(config.seed, "gbm-holdout"));
    rng.shuffle(std::span<std::size_t>(order));
    std::span<const std::size_t> valid(order.data(), n_valid);
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_valid), order.end());
    std::sort(train.begin(), train.end());
    const BoostResult probe = boost(config, x, y, train, valid, rounds, patience, {});
    meta.validation_loss = probe.validation_rmse;
    rounds = probe.best_rounds;
  }
  BoostResult final_fit = boost(config, x, y, all, {}, rounds, 0, on_round);
  meta.rounds_used = final_fit.model.trees.size();
  return TrainedModel(config, x.cols(), std::move(final_fit.model), std::move(meta));
}

}  // namespace olive
