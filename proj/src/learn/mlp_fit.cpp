#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "olive/error.hpp"
#include "olive/learn/model.hpp"
#include "olive/random.hpp"

namespace olive {

double MlpModel::predict(std::span<const double> x) const {
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - x_mean[i]) / x_scale[i];
  return y_mean + y_scale * network.forward(z);
}

namespace {

MlpArchitecture architecture_for(Family family, std::size_t inputs) {
  if (family == Family::mlp_a) return {inputs, {64, 32}, false};
  return {inputs, {128, 64, 32}, true};
}

struct Adam {
  explicit Adam(std::size_t n, double lr) : m(n, 0.0), v(n, 0.0), rate(lr) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
  }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<double> m, v;
  double rate;
  std::size_t t = 0;
};

}  // namespace

TrainedModel fit_mlp(const Matrix& x, std::span<const double> y, const ModelConfig& config) {
  config.validate();
  if (!is_mlp(config.family)) throw ConfigError("fit_mlp needs a network family");
  check_training_data(x, y);

  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  MlpModel model{MlpNetwork(architecture_for(config.family, p)), {}, {}, 0.0, 1.0};

  // z-score standardization from training statistics; zero variance -> unit scale.
  model.x_mean.assign(p, 0.0);
  model.x_scale.assign(p, 1.0);
  for (std::size_t f = 0; f < p; ++f) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, f);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, f) - mean) * (x(r, f) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    model.x_mean[f] = mean;
    model.x_scale[f] = sd > 0.0 ? sd : 1.0;
  }
  double offset = 0.0;
  for (double v : y) offset += v - y[0];
  model.y_mean = y[0] + offset / static_cast<double>(n);
  double y_var = 0.0;
  for (double v : y) y_var += (v - model.y_mean) * (v - model.y_mean);
  const double y_sd = std::sqrt(y_var / static_cast<double>(n));
  model.y_scale = y_sd > 0.0 ? y_sd : 1.0;

  Matrix z(n, p);
  std::vector<double> t(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < p; ++f) z(r, f) = (x(r, f) - model.x_mean[f]) / model.x_scale[f];
    t[r] = (y[r] - model.y_mean) / model.y_scale;
  }

  Rng rng(derive_seed(config.seed, "mlp"));
  model.network.initialize(rng);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> train = order, valid;
  const std::size_t patience = config.get_count("patience");
  const auto n_valid = static_cast<std::size_t>(
      std::floor(config.get("validation_fraction") * static_cast<double>(n)));
  if (patience > 0 && n_valid >= 2 && n - n_valid >= 2) {
    rng.shuffle(std::span<std::size_t>(order));
    valid.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_valid));
    train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_valid), order.end());
    std::sort(train.begin(), train.end());
  }

  const std::size_t epochs = config.get_count("epochs");
  const std::size_t batch = config.get_count("batch_size");
  Adam adam(model.network.parameters().size(), config.get("learning_rate"));
  std::vector<double> grad(model.network.parameters().size());
  std::vector<double> best_params(model.network.parameters().begin(),
                                  model.network.parameters().end());
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  TrainingMetadata meta;
  if (!valid.empty()) {
    best = std::sqrt(model.network.loss(z, t, valid)) * model.y_scale;
    meta.validation_loss.push_back(best);
  }

  std::size_t epoch = 0;
  while (epoch < epochs) {
    ++epoch;
    rng.shuffle(std::span<std::size_t>(train));
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t len = std::min(batch, train.size() - start);
      model.network.loss_and_gradient(z, t, std::span<const std::size_t>(train).subspan(start, len), grad);
      adam.step(model.network.parameters(), grad);
    }
    if (valid.empty()) continue;
    const double score = std::sqrt(model.network.loss(z, t, valid)) * model.y_scale;
    meta.validation_loss.push_back(score);
    if (score < best) {
      best = score;
      best_epoch = epoch;
      const auto params = model.network.parameters();
      std::copy(params.begin(), params.end(), best_params.begin());
    } else if (epoch - best_epoch >= patience) {
      break;
    }
  }
  if (!valid.empty()) {
    std::copy(best_params.begin(), best_params.end(), model.network.parameters().begin());
    meta.rounds_used = best_epoch;
  } else {
    meta.rounds_used = epoch;
  }
  return TrainedModel(config, p, std::move(model), std::move(meta));
}

}  // namespace olive
