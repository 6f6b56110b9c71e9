#include "olive/learn/stack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "olive/error.hpp"
#include "olive/metrics.hpp"
#include "olive/random.hpp"

namespace olive {

OofResult out_of_fold_predict(const Matrix& x, std::span<const double> y,
                              const ModelConfig& config,
                              std::span<const std::vector<std::size_t>> folds) {
  check_training_data(x, y);
  const std::size_t n = x.rows();
  if (folds.size() < 2 || folds.size() > n) throw DataError("fold count must satisfy 2 <= k <= n");
  std::vector<int> owner(n, -1);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t r : folds[f]) {
      if (r >= n || owner[r] != -1) throw DataError("folds must partition the rows");
      owner[r] = static_cast<int>(f);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw DataError("folds must cover every row");
  }

  OofResult out;
  out.oof.assign(n, 0.0);
  out.folds.assign(folds.begin(), folds.end());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    train.reserve(n - folds[f].size());
    for (std::size_t r = 0; r < n; ++r) {
      if (owner[r] != static_cast<int>(f)) train.push_back(r);
    }
    std::vector<double> y_train(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = y[train[i]];
    ModelConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, f);
    out.fold_models.push_back(fit_model(x.select_rows(train), y_train, fold_config));
    const auto held = out.fold_models.back().predict(x.select_rows(folds[f]));
    for (std::size_t i = 0; i < folds[f].size(); ++i) out.oof[folds[f][i]] = held[i];
  }
  return out;
}

OofResult out_of_fold_predict(const Matrix& x, std::span<const double> y,
                              const ModelConfig& config, std::size_t k, std::uint64_t seed) {
  const auto folds = kfold_split(x.rows(), k, seed);
  return out_of_fold_predict(x, y, config, folds);
}

std::vector<double> blend(std::span<const std::vector<double>> candidates,
                          std::span<const double> weights) {
  if (candidates.size() != weights.size()) throw DataError("blend: weight count mismatch");
  const std::size_t n = candidates.empty() ? 0 : candidates.front().size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (candidates[j].size() != n) throw DataError("blend: candidate lengths differ");
    if (weights[j] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out[i] += weights[j] * candidates[j][i];
  }
  return out;
}

std::vector<double> greedy_weighted_ensemble(std::span<const std::vector<double>> candidates,
                                             std::span<const double> targets,
                                             std::size_t iterations) {
  if (candidates.empty()) throw DataError("greedy ensemble needs at least one candidate");
  if (iterations < 1) throw DataError("greedy ensemble needs at least one iteration");
  for (const auto& c : candidates) {
    if (c.size() != targets.size()) throw DataError("candidate and target lengths differ");
  }
  const std::size_t m = candidates.size();
  std::vector<double> counts(m, 0.0);
  double total = 0.0;
  double best_score = std::numeric_limits<double>::infinity();

  auto weights_for = [&](const std::vector<double>& c, double t) {
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j) w[j] = c[j] / t;
    return w;
  };

  for (std::size_t step = 0; step < iterations; ++step) {
    std::size_t pick = m;
    double pick_score = best_score;
    for (std::size_t j = 0; j < m; ++j) {
      counts[j] += 1.0;
      const double score = rmse(blend(candidates, weights_for(counts, total + 1.0)), targets);
      counts[j] -= 1.0;
      if (score < pick_score) {
        pick_score = score;
        pick = j;
      }
    }
    if (pick == m) break;
    counts[pick] += 1.0;
    total += 1.0;
    best_score = pick_score;
  }
  return weights_for(counts, total);
}

void StackSpec::validate() const {
  if (layers.empty()) throw ConfigError("stack needs at least one layer");
  for (const auto& layer : layers) {
    if (layer.empty()) throw ConfigError("stack layers must not be empty");
    for (const auto& c : layer) c.validate();
  }
  if (k < 2) throw ConfigError("stack fold count must be >= 2");
  if (ensemble_iterations < 1) throw ConfigError("ensemble iterations must be >= 1");
}

nlohmann::json StackSpec::to_json() const {
  nlohmann::json j_layers = nlohmann::json::array();
  for (const auto& layer : layers) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& c : layer) {
      members.push_back({{"family", to_string(c.family)}, {"hyperparameters", c.hyperparameters}});
    }
    j_layers.push_back(members);
  }
  return {{"layers", j_layers},
          {"k", k},
          {"ensemble_iterations", ensemble_iterations},
          {"tuning_budget", tuning_budget}};
}

StackSpec StackSpec::from_json(const nlohmann::json& j) {
  StackSpec spec = default_stack_spec();
  try {
    if (j.contains("layers")) {
      spec.layers.clear();
      for (const auto& layer : j.at("layers")) {
        std::vector<ModelConfig> members;
        for (const auto& m : layer) {
          if (m.is_string()) {
            members.push_back(ModelConfig::make(parse_family(m.get<std::string>())));
          } else {
            std::map<std::string, double> hp;
            if (m.contains("hyperparameters")) {
              hp = m.at("hyperparameters").get<std::map<std::string, double>>();
            }
            members.push_back(ModelConfig::make(parse_family(m.at("family").get<std::string>()), hp));
          }
        }
        spec.layers.push_back(std::move(members));
      }
    }
    if (j.contains("k")) spec.k = j.at("k").get<std::size_t>();
    if (j.contains("ensemble_iterations")) {
      spec.ensemble_iterations = j.at("ensemble_iterations").get<std::size_t>();
    }
    if (j.contains("tuning_budget")) spec.tuning_budget = j.at("tuning_budget").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed stack spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

StackSpec default_stack_spec() {
  StackSpec spec;
  std::vector<ModelConfig> first;
  for (Family f : kAllFamilies) first.push_back(ModelConfig::make(f));
  spec.layers.push_back(first);
  spec.layers.push_back(std::move(first));
  return spec;
}

StackEnsemble::StackEnsemble(std::vector<std::vector<StackMember>> layers,
                             std::vector<double> meta_weights, std::size_t k,
                             std::uint64_t seed, std::size_t feature_count)
    : layers_(std::move(layers)),
      meta_weights_(std::move(meta_weights)),
      k_(k),
      seed_(seed),
      feature_count_(feature_count) {
  if (layers_.empty()) throw DataError("stack has no layers");
  if (meta_weights_.size() != layers_.back().size()) {
    throw DataError("meta weights do not match the final layer");
  }
  double sum = 0.0;
  for (double w : meta_weights_) {
    if (!(w >= 0.0)) throw DataError("meta weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DataError("meta weights must sum to 1");
  for (const auto& layer : layers_) {
    for (const auto& member : layer) {
      if (member.fold_models.size() != k_) {
        throw DataError("each stack member must hold exactly k fold models");
      }
    }
  }
}

namespace {

std::vector<double> member_predict(const StackMember& member, const Matrix& rows) {
  // Mean as an offset from the first fold model, exact when all agree.
  std::vector<double> first = member.fold_models.front().predict(rows);
  std::vector<double> offset(rows.rows(), 0.0);
  for (const auto& model : member.fold_models) {
    const auto p = model.predict(rows);
    for (std::size_t i = 0; i < p.size(); ++i) offset[i] += p[i] - first[i];
  }
  for (std::size_t i = 0; i < first.size(); ++i) {
    first[i] += offset[i] / static_cast<double>(member.fold_models.size());
  }
  return first;
}

Matrix columns_of(const std::vector<std::vector<double>>& cols, std::size_t rows) {
  Matrix m(rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
  }
  return m;
}

}  // namespace

std::vector<double> StackEnsemble::predict(const Matrix& rows) const {
  if (rows.cols() != feature_count_ && rows.rows() > 0) {
    throw DataError("stack expects " + std::to_string(feature_count_) + " features, got " +
                    std::to_string(rows.cols()));
  }
  Matrix input = rows;
  std::vector<std::vector<double>> outputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    outputs.clear();
    for (const auto& member : layers_[l]) outputs.push_back(member_predict(member, input));
    if (l + 1 < layers_.size()) input = rows.append_columns(columns_of(outputs, rows.rows()));
  }
  return blend(outputs, meta_weights_);
}

nlohmann::json StackEnsemble::to_json() const {
  nlohmann::json j_layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& member : layer) {
      nlohmann::json models = nlohmann::json::array();
      for (const auto& m : member.fold_models) models.push_back(m.to_json());
      members.push_back({{"name", member.name},
                         {"config", member.config.to_json()},
                         {"fold_models", models}});
    }
    j_layers.push_back(members);
  }
  return {{"format_version", 1},
          {"kind", "stack_ensemble"},
          {"k", k_},
          {"seed", seed_},
          {"feature_count", feature_count_},
          {"meta_weights", meta_weights_},
          {"layers", j_layers}};
}

StackEnsemble StackEnsemble::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != 1 ||
        j.at("kind").get<std::string>() != "stack_ensemble") {
      throw DataError("not a version-1 stack ensemble document");
    }
    std::vector<std::vector<StackMember>> layers;
    for (const auto& layer : j.at("layers")) {
      std::vector<StackMember> members;
      for (const auto& m : layer) {
        StackMember member{m.at("name").get<std::string>(), ModelConfig::from_json(m.at("config")), {}};
        for (const auto& fm : m.at("fold_models")) {
          member.fold_models.push_back(TrainedModel::from_json(fm));
        }
        members.push_back(std::move(member));
      }
      layers.push_back(std::move(members));
    }
    return StackEnsemble(std::move(layers), j.at("meta_weights").get<std::vector<double>>(),
                         j.at("k").get<std::size_t>(), j.at("seed").get<std::uint64_t>(),
                         j.at("feature_count").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed stack document: ") + e.what());
  }
}

nlohmann::json TrainReport::to_json(bool include_timing) const {
  nlohmann::json members_json = nlohmann::json::array();
  for (const auto& m : members) {
    members_json.push_back({{"name", m.name}, {"layer", m.layer}, {"oof_rmse", m.oof_rmse}});
  }
  nlohmann::json weights_json = nlohmann::json::object();
  for (std::size_t i = 0; i < weights.size(); ++i) weights_json[ensemble_members[i]] = weights[i];
  nlohmann::json j = {{"members", members_json},
                      {"weights", weights_json},
                      {"ensemble_oof_rmse", ensemble_oof_rmse},
                      {"seed", seed}};
  if (include_timing) j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

namespace {

struct SearchDim {
  std::string_view name;
  double lo, hi;
  bool log_scale, integer;
};

std::vector<SearchDim> search_space(Family family) {
  switch (family) {
    case Family::random_forest:
    case Family::extra_trees:
      return {{"max_depth", 4, 24, false, true},
              {"min_samples_leaf", 1, 8, false, true},
              {"max_features", 1, 8, false, true}};
    case Family::gbm_level:
    case Family::gbm_symmetric:
      return {{"learning_rate", 0.02, 0.3, true, false},
              {"max_depth", 3, 8, false, true},
              {"l2", 0, 10, false, false}};
    case Family::gbm_leaf:
      return {{"learning_rate", 0.02, 0.3, true, false},
              {"num_leaves", 8, 63, false, true},
              {"min_samples_leaf", 1, 10, false, true},
              {"l2", 0, 10, false, false}};
    case Family::mlp_a:
    case Family::mlp_b:
      return {{"learning_rate", 3e-4, 3e-3, true, false}, {"batch_size", 16, 64, false, true}};
  }
  return {};
}

double oof_score(const OofResult& r, std::span<const double> y) { return rmse(r.oof, y); }

}  // namespace

std::pair<ModelConfig, OofResult> tune_member(const Matrix& x, std::span<const double> y,
                                              const ModelConfig& base,
                                              std::span<const std::vector<std::size_t>> folds,
                                              std::size_t budget, std::uint64_t seed) {
  ModelConfig best_config = base;
  OofResult best = out_of_fold_predict(x, y, base, folds);
  double best_score = oof_score(best, y);
  Rng rng(derive_seed(seed, "tune"));
  for (std::size_t trial = 0; trial < budget; ++trial) {
    ModelConfig candidate = base;
    for (const auto& dim : search_space(base.family)) {
      double v = 0.0;
      if (dim.integer) {
        v = std::min(std::floor(rng.uniform(dim.lo, dim.hi + 1.0)), dim.hi);
      } else if (dim.log_scale) {
        v = std::exp(rng.uniform(std::log(dim.lo), std::log(dim.hi)));
      } else {
        v = rng.uniform(dim.lo, dim.hi);
      }
      candidate.hyperparameters[std::string(dim.name)] = v;
    }
    candidate.validate();
    OofResult result = out_of_fold_predict(x, y, candidate, folds);
    const double score = oof_score(result, y);
    if (score < best_score) {
      best_score = score;
      best = std::move(result);
      best_config = candidate;
    }
  }
  return {best_config, std::move(best)};
}

std::pair<StackEnsemble, TrainReport> fit_stack(const Matrix& x, std::span<const double> y,
                                                const StackSpec& spec, std::uint64_t seed) {
  spec.validate();
  check_training_data(x, y);
  if (spec.k > x.rows()) throw DataError("stack fold count exceeds row count");
  const auto started = std::chrono::steady_clock::now();

  const auto folds = kfold_split(x.rows(), spec.k, derive_seed(seed, "stack-folds"));
  TrainReport report;
  report.seed = seed;
  std::vector<std::vector<StackMember>> layers;
  Matrix input = x;
  std::vector<std::vector<double>> oof_outputs;

  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const std::uint64_t layer_seed = derive_seed(seed, "layer-" + std::to_string(l + 1));
    std::vector<StackMember> members;
    std::vector<std::vector<double>> layer_oof;
    std::map<std::string, int> seen;
    for (std::size_t m = 0; m < spec.layers[l].size(); ++m) {
      ModelConfig config = spec.layers[l][m];
      config.seed = derive_seed(layer_seed, m);
      std::string name = "L" + std::to_string(l + 1) + "/" + std::string(to_string(config.family));
      if (const int dup = seen[name]++; dup > 0) name += "#" + std::to_string(dup + 1);

      OofResult result;
      if (spec.tuning_budget > 0) {
        std::tie(config, result) =
            tune_member(input, y, config, folds, spec.tuning_budget, config.seed);
      } else {
        result = out_of_fold_predict(input, y, config, folds);
      }
      report.members.push_back({name, l + 1, rmse(result.oof, y)});
      layer_oof.push_back(std::move(result.oof));
      members.push_back({name, config, std::move(result.fold_models)});
    }
    layers.push_back(std::move(members));
    oof_outputs = std::move(layer_oof);
    if (l + 1 < spec.layers.size()) input = x.append_columns(columns_of(oof_outputs, x.rows()));
  }

  report.weights = greedy_weighted_ensemble(oof_outputs, y, spec.ensemble_iterations);
  for (const auto& member : layers.back()) report.ensemble_members.push_back(member.name);
  report.ensemble_oof_rmse = rmse(blend(oof_outputs, report.weights), y);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  StackEnsemble ensemble(std::move(layers), report.weights, spec.k, seed, x.cols());
  return {std::move(ensemble), std::move(report)};
}

std::pair<StackEnsemble, TrainReport> fit_stack(const FeatureTable& table,
                                                const StackSpec& spec, std::uint64_t seed) {
  return fit_stack(table.features(), table.targets(), spec, seed);
}

}  // namespace olive
