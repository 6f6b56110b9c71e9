#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "olive/error.hpp"
#include "olive/learn/stack.hpp"
#include "olive/metrics.hpp"
#include "support.hpp"

using namespace olive;

namespace {

struct Data {
  Matrix x;
  std::vector<double> y;
};

Data make_data(std::size_t n, std::size_t p, std::uint64_t seed, double noise = 0.1) {
  Rng rng(seed);
  Data d{Matrix(n, p), std::vector<double>(n)};
  for (auto& v : d.x.data()) v = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    d.y[i] = 3.0 + 2.0 * d.x(i, 0) - d.x(i, 1) * d.x(i, 1) + noise * rng.normal();
  }
  return d;
}

ModelConfig quick(Family f, std::uint64_t seed = 0) {
  if (is_forest(f)) return ModelConfig::make(f, {{"n_trees", 20}}, seed);
  if (is_gbm(f)) return ModelConfig::make(f, {{"n_rounds", 30}, {"patience", 0}}, seed);
  return ModelConfig::make(f, {{"epochs", 20}}, seed);
}

StackSpec quick_spec(std::size_t layers) {
  StackSpec s;
  s.layers.push_back({quick(Family::gbm_level), quick(Family::random_forest), quick(Family::mlp_a)});
  if (layers > 1) s.layers.push_back({quick(Family::gbm_leaf), quick(Family::extra_trees)});
  s.k = 3;
  s.ensemble_iterations = 25;
  return s;
}

}  // namespace

TEST_CASE("out-of-fold predictions on a constant target") {
  const Data d = make_data(30, 4, 1);
  const std::vector<double> y(30, 2.5);
  for (Family f : kAllFamilies) {
    const OofResult r = out_of_fold_predict(d.x, y, quick(f), 5, 7);
    CHECK(rmse(r.oof, y) == 0.0);
  }
}

TEST_CASE("out-of-fold bookkeeping") {
  const Data d = make_data(10, 3, 2);
  const OofResult r = out_of_fold_predict(d.x, d.y, quick(Family::random_forest, 9), 5, 3);
  REQUIRE(r.fold_models.size() == 5);
  REQUIRE(r.folds.size() == 5);
  CHECK(r.folds == kfold_split(10, 5, 3));
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(r.folds[f].size() == 2);
    // Each held-out row is predicted by the model of its own fold, trained on
    // the other 8 rows: refit that model independently and compare.
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < 5; ++g) {
      if (g != f) train.insert(train.end(), r.folds[g].begin(), r.folds[g].end());
    }
    CHECK(train.size() == 8);
    std::sort(train.begin(), train.end());
    std::vector<std::size_t> fold_train;
    for (std::size_t i = 0; i < 10; ++i) {
      if (std::find(r.folds[f].begin(), r.folds[f].end(), i) == r.folds[f].end()) fold_train.push_back(i);
    }
    CHECK(fold_train == train);
    for (std::size_t row : r.folds[f]) {
      CHECK(r.oof[row] == r.fold_models[f].predict_row(d.x.row(row)));
    }
  }
  CHECK_THROWS_AS(out_of_fold_predict(d.x, d.y, quick(Family::gbm_level), 1, 0), DataError);
  CHECK_THROWS_AS(out_of_fold_predict(d.x, d.y, quick(Family::gbm_level), 11, 0), DataError);
}

TEST_CASE("out-of-fold rows never train their own predictor") {
  // A 1-nearest-neighbour-like forest memorizes training rows exactly; with
  // duplicated-free random targets the oof error must stay large.
  Rng rng(4);
  Matrix x(40, 2);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = rng.uniform();
    y[i] = rng.uniform(0, 10);
  }
  const auto cfg = ModelConfig::make(Family::random_forest,
                                     {{"n_trees", 5}, {"bootstrap", 0}, {"min_samples_leaf", 1}, {"max_features", 2}}, 1);
  const TrainedModel full = fit_model(x, y, cfg);
  CHECK(rmse(full.predict(x), y) < 1e-12);
  const OofResult r = out_of_fold_predict(x, y, cfg, 4, 1);
  for (std::size_t i = 0; i < 40; ++i) CHECK(r.oof[i] != y[i]);
}

TEST_CASE("greedy ensemble worked examples") {
  const std::vector<double> t = {2.0, 2.0};
  const std::vector<std::vector<double>> ab = {{1.0, 3.0}, {3.0, 1.0}};
  const auto w = greedy_weighted_ensemble(ab, t, 10);
  CHECK(w[0] == 0.5);
  CHECK(w[1] == 0.5);
  CHECK(rmse(blend(ab, w), t) == 0.0);

  const std::vector<std::vector<double>> one = {{1.0, 5.0}};
  CHECK(greedy_weighted_ensemble(one, t, 10) == std::vector<double>{1.0});

  const std::vector<double> targets = {1.0, 4.0, 2.0, 8.0};
  const std::vector<std::vector<double>> perfect = {{3, 3, 3, 3}, targets, {0, 9, 1, 2}};
  const auto wp = greedy_weighted_ensemble(perfect, targets, 50);
  CHECK(wp == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(rmse(blend(perfect, wp), targets) == 0.0);

  CHECK_THROWS_AS(greedy_weighted_ensemble({}, t, 5), DataError);
  CHECK_THROWS_AS(greedy_weighted_ensemble(ab, t, 0), DataError);
  const std::vector<std::vector<double>> bad = {{1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(greedy_weighted_ensemble(bad, t, 5), DataError);
}

TEST_CASE("two-candidate weight grid oracle") {
  // Exhaustive search over w in {0, 1/T, ..., 1} for A=[1,3], B=[3,1].
  const std::vector<double> t = {2.0, 2.0};
  double best = 1e300, best_w = -1;
  for (int i = 0; i <= 100; ++i) {
    const double w = i / 100.0;
    const std::vector<double> p = {w * 1 + (1 - w) * 3, w * 3 + (1 - w) * 1};
    const double e = rmse(p, t);
    if (e < best) {
      best = e;
      best_w = w;
    }
  }
  CHECK(best_w == 0.5);
  CHECK(best == 0.0);
}

TEST_CASE("greedy ensemble never loses to its best candidate") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 3 + rng.below(5);
    std::vector<double> t(100);
    for (auto& v : t) v = rng.normal();
    std::vector<std::vector<double>> c(m, std::vector<double>(100));
    for (auto& cand : c) {
      const double bias = rng.normal(), noise = rng.uniform(0.1, 2.0);
      for (std::size_t i = 0; i < 100; ++i) cand[i] = t[i] + bias + noise * rng.normal();
    }
    const auto w = greedy_weighted_ensemble(c, t, 100);
    double best = 1e300;
    for (const auto& cand : c) best = std::min(best, rmse(cand, t));
    CHECK(rmse(blend(c, w), t) <= best);
    double sum = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("stack spec defaults and JSON") {
  const StackSpec d = default_stack_spec();
  REQUIRE(d.layers.size() == 2);
  CHECK(d.layers[0].size() == 7);
  REQUIRE(d.layers[1].size() == 7);
  for (std::size_t m = 0; m < 7; ++m) CHECK(d.layers[1][m].family == kAllFamilies[m]);
  CHECK(d.k == 5);

  const StackSpec back = StackSpec::from_json(quick_spec(2).to_json());
  CHECK(back.to_json() == quick_spec(2).to_json());

  const auto j = nlohmann::json::parse(R"({"layers": [["gbm_leaf", {"family": "mlp_b", "hyperparameters": {"epochs": 3}}]], "k": 4})");
  const StackSpec s = StackSpec::from_json(j);
  CHECK(s.layers[0][1].get("epochs") == 3);
  CHECK(s.k == 4);
  CHECK_THROWS_AS(StackSpec::from_json(nlohmann::json::parse(R"({"layers": [[]]})")), ConfigError);
  CHECK_THROWS_AS(StackSpec::from_json(nlohmann::json::parse(R"({"layers": [["xgb"]]})")), ConfigError);
  CHECK_THROWS_AS(StackSpec::from_json(nlohmann::json::parse(R"({"k": 1})")), ConfigError);
}

TEST_CASE("single-member stack predicts the mean of its fold models") {
  const Data d = make_data(45, 4, 5);
  StackSpec s;
  s.layers = {{quick(Family::gbm_symmetric)}};
  s.k = 3;
  const auto [ens, report] = fit_stack(d.x, d.y, s, 11);
  CHECK(ens.meta_weights() == std::vector<double>{1.0});
  const auto& models = ens.layers()[0][0].fold_models;
  REQUIRE(models.size() == 3);
  const auto p = ens.predict(d.x);
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    const double mean = (models[0].predict_row(d.x.row(i)) + models[1].predict_row(d.x.row(i)) +
                         models[2].predict_row(d.x.row(i))) / 3.0;
    CHECK(p[i] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("two-layer stack: report invariant, determinism and persistence") {
  const Data d = make_data(90, 5, 6, 0.3);
  const StackSpec s = quick_spec(2);
  const auto [ens, report] = fit_stack(d.x, d.y, s, 21);
  CHECK(ens.layers().size() == 2);
  for (const auto& layer : ens.layers()) {
    for (const auto& m : layer) CHECK(m.fold_models.size() == 3);
  }
  CHECK(ens.layers()[1][0].fold_models[0].feature_count() == 5 + 3);
  double best_final = 1e300;
  for (const auto& m : report.members) {
    if (m.layer == 2) best_final = std::min(best_final, m.oof_rmse);
  }
  CHECK(report.ensemble_oof_rmse <= best_final);
  CHECK(report.members.size() == 5);
  CHECK(report.members[0].name == "L1/gbm_level");
  CHECK(report.ensemble_members == std::vector<std::string>{"L2/gbm_leaf", "L2/extra_trees"});
  double sum = 0.0;
  for (double w : ens.meta_weights()) sum += w;
  CHECK(std::abs(sum - 1.0) <= 1e-12);

  const auto [ens2, report2] = fit_stack(d.x, d.y, s, 21);
  CHECK(ens2.predict(d.x) == ens.predict(d.x));
  CHECK(report2.to_json().dump() == report.to_json().dump());
  CHECK_FALSE(report.to_json().contains("wall_clock_seconds"));
  CHECK(report.to_json(true).contains("wall_clock_seconds"));

  const StackEnsemble back = StackEnsemble::from_json(nlohmann::json::parse(ens.to_json().dump()));
  CHECK(back.predict(d.x) == ens.predict(d.x));
  CHECK_THROWS_AS(ens.predict(Matrix(2, 4)), DataError);
}

TEST_CASE("row order does not change oof RMSE when folds follow the rows") {
  const Data d = make_data(60, 3, 8, 0.2);
  const auto folds = kfold_split(60, 4, 5);
  const auto cfg = quick(Family::gbm_level, 2);
  const OofResult a = out_of_fold_predict(d.x, d.y, cfg, folds);

  // Reverse the rows and carry each row's fold assignment with it.
  std::vector<std::size_t> perm(60);
  for (std::size_t i = 0; i < 60; ++i) perm[i] = 59 - i;
  const Matrix xs = d.x.select_rows(perm);
  std::vector<double> ys(60);
  for (std::size_t i = 0; i < 60; ++i) ys[i] = d.y[perm[i]];
  std::vector<std::vector<std::size_t>> moved(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t r : folds[f]) moved[f].push_back(59 - r);
    std::sort(moved[f].begin(), moved[f].end());
  }
  // gbm_level trains on rows in index order; present the same order per fold.
  const OofResult b = out_of_fold_predict(xs, ys, cfg, moved);
  CHECK(rmse(b.oof, ys) == doctest::Approx(rmse(a.oof, d.y)).epsilon(1e-9));
}

TEST_CASE("tuning includes the default configuration") {
  const Data d = make_data(50, 3, 9, 0.2);
  const auto folds = kfold_split(50, 3, 1);
  const auto base = quick(Family::gbm_level, 1);
  const OofResult plain = out_of_fold_predict(d.x, d.y, base, folds);
  const auto [cfg, tuned] = tune_member(d.x, d.y, base, folds, 4, 3);
  CHECK(rmse(tuned.oof, d.y) <= rmse(plain.oof, d.y));
  const auto [cfg2, tuned2] = tune_member(d.x, d.y, base, folds, 4, 3);
  CHECK(cfg2 == cfg);
  const auto [cfg0, tuned0] = tune_member(d.x, d.y, base, folds, 0, 3);
  CHECK(cfg0 == base);
}

TEST_CASE("fit_stack errors") {
  const Data d = make_data(10, 3, 1);
  StackSpec s = quick_spec(1);
  s.k = 11;
  CHECK_THROWS_AS(fit_stack(d.x, d.y, s, 1), DataError);
  s.k = 1;
  CHECK_THROWS_AS(fit_stack(d.x, d.y, s, 1), ConfigError);
  s.k = 2;
  s.layers.push_back({});
  CHECK_THROWS_AS(fit_stack(d.x, d.y, s, 1), ConfigError);
}
