#include "olive/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "olive/error.hpp"
#include "olive/random.hpp"

namespace olive {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_size) {
  if (a.size() != b.size()) throw DataError("metric inputs differ in length");
  if (a.size() < min_size) {
    throw DataError("metric needs at least " + std::to_string(min_size) + " values");
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double rmse(std::span<const double> estimates, std::span<const double> actuals) {
  check_pair(estimates, actuals, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - actuals[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(estimates.size()));
}

R2Mode parse_r2_mode(std::string_view text) {
  if (text == "determination") return R2Mode::determination;
  if (text == "pearson_sq") return R2Mode::pearson_sq;
  throw ConfigError("unknown R2 mode '" + std::string(text) + "'");
}

std::string_view to_string(R2Mode mode) {
  return mode == R2Mode::determination ? "determination" : "pearson_sq";
}

double r_squared(std::span<const double> estimates, std::span<const double> actuals,
                 R2Mode mode) {
  check_pair(estimates, actuals, 2);
  const double mean_a = mean(actuals);
  double ss_tot = 0.0;
  for (double a : actuals) ss_tot += (a - mean_a) * (a - mean_a);

  if (mode == R2Mode::determination) {
    if (ss_tot == 0.0) throw DataError("R2 undefined: actual values are constant");
    double ss_res = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) {
      ss_res += (actuals[i] - estimates[i]) * (actuals[i] - estimates[i]);
    }
    return 1.0 - ss_res / ss_tot;
  }

  const double mean_e = mean(estimates);
  double ss_e = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    ss_e += (estimates[i] - mean_e) * (estimates[i] - mean_e);
    cross += (estimates[i] - mean_e) * (actuals[i] - mean_a);
  }
  if (ss_tot == 0.0 || ss_e == 0.0) {
    throw DataError("Pearson R2 undefined: an input vector is constant");
  }
  return cross * cross / (ss_e * ss_tot);
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw DataError("fold count must satisfy 2 <= k <= n (k=" + std::to_string(k) +
                    ", n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<std::vector<std::size_t>> folds(k);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

}  // namespace olive
