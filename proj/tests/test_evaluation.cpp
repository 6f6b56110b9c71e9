#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "olive/error.hpp"
#include "olive/evaluation.hpp"
#include "support.hpp"

using namespace olive;
using doctest::Approx;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

FeatureTable dem_table(std::size_t n, std::uint64_t seed, double noise) {
  Rng rng(seed);
  std::vector<std::string> ids;
  Matrix x(n, kFeatureCount);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < 12; ++j) x(i, j) = rng.uniform();
    x(i, 12) = rng.uniform(0, 3);
    y[i] = std::max(0.0, 2.0 * x(i, 12) + noise * rng.normal());
  }
  return FeatureTable(std::move(ids), std::move(x), std::move(y));
}

StackSpec quick_spec() {
  StackSpec s;
  s.layers = {{ModelConfig::make(Family::gbm_level, {{"n_rounds", 40}, {"patience", 0}}),
               ModelConfig::make(Family::random_forest, {{"n_trees", 25}})}};
  s.k = 3;
  return s;
}

}  // namespace

TEST_CASE("rmse worked values") {
  const std::vector<double> a = {1.5, -2.0, 7.0};
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(std::vector<double>{2, 4}, std::vector<double>{1, 3}) == Approx(1.0).epsilon(1e-12));
  CHECK(rmse(std::vector<double>{0}, std::vector<double>{3}) == Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(rmse(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST_CASE("r squared worked values") {
  const std::vector<double> act = {1, 2, 4};
  CHECK(r_squared(act, act) == Approx(1.0).epsilon(1e-12));
  CHECK(r_squared(act, act, R2Mode::pearson_sq) == Approx(1.0).epsilon(1e-12));
  const double m = 7.0 / 3.0;
  CHECK(r_squared(std::vector<double>{m, m, m}, act) == Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(r_squared(std::vector<double>{1, 2, 3}, act) == Approx(0.785714).epsilon(1e-6));
  CHECK(std::abs(r_squared(std::vector<double>{1, 2, 3}, act) - 11.0 / 14.0) <= 1e-12);
  const std::vector<double> flat = {3, 3, 3};
  CHECK_THROWS_AS(r_squared(act, flat), DataError);
  CHECK_THROWS_AS(r_squared(flat, act, R2Mode::pearson_sq), DataError);
  CHECK_THROWS_AS(r_squared(std::vector<double>{1}, std::vector<double>{1}), DataError);
  CHECK(parse_r2_mode("pearson_sq") == R2Mode::pearson_sq);
  CHECK_THROWS_AS(parse_r2_mode("adjusted"), ConfigError);
}

TEST_CASE("rmse is zero only for identical vectors") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(20), b(20);
    for (std::size_t i = 0; i < 20; ++i) a[i] = b[i] = rng.normal();
    CHECK(rmse(a, b) == 0.0);
    b[rng.below(20)] += 1e-3;
    CHECK(rmse(a, b) > 0.0);
  }
}

TEST_CASE("r squared invariances") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> e(30), a(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = rng.normal();
      e[i] = a[i] + rng.normal();
    }
    const double c = rng.uniform(-50, 50);
    std::vector<double> e2 = e, a2 = a;
    for (auto& v : e2) v += c;
    for (auto& v : a2) v += c;
    CHECK(r_squared(e2, a2) == Approx(r_squared(e, a)).epsilon(1e-9));

    const double s1 = rng.uniform(0.1, 10), s2 = rng.uniform(0.1, 10);
    const double o1 = rng.uniform(-5, 5), o2 = rng.uniform(-5, 5);
    std::vector<double> e3 = e, a3 = a;
    for (auto& v : e3) v = s1 * v + o1;
    for (auto& v : a3) v = s2 * v + o2;
    CHECK(r_squared(e3, a3, R2Mode::pearson_sq) ==
          Approx(r_squared(e, a, R2Mode::pearson_sq)).epsilon(1e-9));
  }
}

TEST_CASE("kfold split sizes and partition") {
  const auto folds = kfold_split(192, 5, 42);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.size());
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{38, 38, 38, 39, 39});
  for (const auto& f : kfold_split(10, 5, 1)) CHECK(f.size() == 2);
  CHECK_THROWS_AS(kfold_split(4, 5, 1), DataError);
  CHECK_THROWS_AS(kfold_split(10, 1, 1), DataError);

  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(300);
    const std::size_t k = 2 + rng.below(std::min<std::size_t>(n - 1, 20));
    const std::uint64_t seed = rng.next();
    const auto a = kfold_split(n, k, seed);
    CHECK(a == kfold_split(n, k, seed));
    std::vector<std::size_t> all;
    std::size_t lo = n, hi = 0;
    for (const auto& f : a) {
      all.insert(all.end(), f.begin(), f.end());
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
    }
    CHECK(hi - lo <= 1);
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
  }
  CHECK(kfold_split(50, 5, 1) != kfold_split(50, 5, 2));
}

TEST_CASE("cross validation report structure and determinism") {
  const FeatureTable t = dem_table(60, 4, 0.3);
  CvOptions o;
  o.k = 4;
  o.seed = 9;
  o.importance_repeats = 2;
  const EvalReport r = cross_validate(t, quick_spec(), o);
  REQUIRE(r.per_fold.size() == 4);
  double r2 = 0, e = 0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(r.per_fold[f].fold == f);
    r2 += r.per_fold[f].r2;
    e += r.per_fold[f].rmse;
    n += r.per_fold[f].n;
  }
  CHECK(std::abs(r.mean_r2 - r2 / 4) <= 1e-12);
  CHECK(std::abs(r.mean_rmse - e / 4) <= 1e-12);
  CHECK(n == 60);
  CHECK(r.predictions.size() == 60);
  std::set<std::string> ids;
  for (const auto& p : r.predictions) ids.insert(p.id);
  CHECK(ids.size() == 60);
  REQUIRE(r.importance.size() == 13);
  CHECK(std::accumulate(r.importance.begin(), r.importance.end(), 0.0) == Approx(1.0).epsilon(1e-9));
  for (double v : r.importance) CHECK(v >= 0.0);
  CHECK(r.importance[12] == *std::max_element(r.importance.begin(), r.importance.end()));

  const auto j = r.to_json();
  CHECK(j.at("per_fold").size() == 4);
  CHECK(j.at("k") == 4);
  CHECK(j.at("seed") == 9);
  CHECK(j.at("config").contains("stack"));

  CHECK(cross_validate(t, quick_spec(), o).to_json().dump() == j.dump());
  o.threads = 3;
  CHECK(cross_validate(t, quick_spec(), o).to_json().dump() == j.dump());

  o.r2_mode = R2Mode::pearson_sq;
  const EvalReport p = cross_validate(t, quick_spec(), o);
  CHECK(p.mean_r2 == p.mean_r2_pearson_sq);
  CHECK(p.mean_r2_determination == r.mean_r2_determination);

  o.k = 61;
  CHECK_THROWS_AS(cross_validate(t, quick_spec(), o), DataError);
}

TEST_CASE("noiseless linear elevation target is recovered") {
  const FeatureTable t = dem_table(200, 5, 0.0);
  CvOptions o;
  o.k = 5;
  o.seed = 42;
  o.compute_importance = false;
  const EvalReport r = cross_validate(t, default_stack_spec(), o);
  CHECK(r.mean_r2_determination >= 0.99);
}

TEST_CASE("permutation importance") {
  const FeatureTable t = dem_table(60, 6, 0.1);
  StackSpec s = quick_spec();
  const auto [ens, rep] = fit_stack(t, s, 3);

  const auto shares = permutation_importance(ens, t, 3, 5);
  CHECK(shares.size() == 13);
  CHECK(std::accumulate(shares.begin(), shares.end(), 0.0) == Approx(1.0).epsilon(1e-9));
  CHECK(shares == permutation_importance(ens, t, 3, 5));
  CHECK(std::max_element(shares.begin(), shares.end()) - shares.begin() == 12);
  CHECK_THROWS_AS(permutation_importance(ens, t, 0, 5), DataError);
  CHECK_THROWS_AS(permutation_importance(ens, Matrix(3, 12), std::vector<double>{1, 2, 3}, 1, 1), DataError);

  // A model that ignores its inputs: every increase is zero, shares uniform.
  const std::vector<double> flat(t.size(), 3.0);
  const auto [mean_model, r2] = fit_stack(t.features(), flat, s, 3);
  const auto raw = permutation_increases(mean_model, t.features(), t.targets(), 2, 1);
  for (double v : raw) CHECK(v == 0.0);
  for (double v : permutation_importance(mean_model, t, 2, 1)) CHECK(v == Approx(1.0 / 13));
}

TEST_CASE("normalize importance clamps negatives") {
  const auto s = normalize_importance({-1.0, 1.0, 3.0});
  CHECK(s == std::vector<double>{0.0, 0.25, 0.75});
  const auto u = normalize_importance({-1.0, 0.0});
  CHECK(u == std::vector<double>{0.5, 0.5});
}

TEST_CASE("scatter SVG") {
  const std::vector<double> est = {4.1, 5.0, 2.2, 7.5, 3.3};
  const std::vector<double> act = {4.0, 5.5, 2.0, 7.0, 3.9};
  const ScatterAnnotation note{0.86, 1.17, "R²"};
  const std::string svg = render_scatter(est, act, note);
  CHECK(count(svg, "<circle") == 5);
  CHECK(count(svg, "<line") == 1);
  CHECK(svg.find("Estimated yield (tons ha⁻¹)") != std::string::npos);
  CHECK(svg.find("Actual yield (tons ha⁻¹)") != std::string::npos);
  CHECK(svg.find("0.8600") != std::string::npos);
  CHECK(svg == render_scatter(est, act, note));

  testing::TempDir dir;
  emit_scatter(est, act, dir / "s.svg", note);
  CHECK(testing::slurp(dir / "s.svg") == svg);
  CHECK_THROWS_AS(render_scatter(std::vector<double>{}, std::vector<double>{}, note), DataError);
  CHECK_THROWS_AS(emit_scatter(est, act, dir / "missing" / "s.svg", note), IoError);

  std::vector<double> many(200);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = 0.01 * i;
  CHECK(count(render_scatter(many, many, note), "<circle") == 200);
  CHECK(count(render_scatter(std::vector<double>{2.0}, std::vector<double>{2.0}, note), "<circle") == 1);
}

TEST_CASE("predictions CSV") {
  testing::TempDir dir;
  const std::vector<HeldOutPrediction> rows = {{"a", 1.5, 1.25, 0}, {"b", 3.0, 2.0, 1}};
  write_predictions_csv(rows, dir / "p.csv");
  CHECK(testing::slurp(dir / "p.csv") == "id,actual,estimated,fold\na,1.5,1.25,0\nb,3,2,1\n");
}
