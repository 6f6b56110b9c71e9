#include "olive/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <optional>
#include <thread>

#include "olive/error.hpp"
#include "olive/random.hpp"

namespace olive {

namespace {

struct FoldOutcome {
  FoldResult result;
  std::vector<double> estimates;
  std::vector<double> importance;
};

FoldOutcome run_fold(const FeatureTable& table, const StackSpec& spec, const CvOptions& options,
                     const std::vector<std::vector<std::size_t>>& folds, std::size_t f) {
  std::vector<std::size_t> train;
  for (std::size_t g = 0; g < folds.size(); ++g) {
    if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
  }
  std::sort(train.begin(), train.end());
  const FeatureTable train_table = table.subset(train);
  const FeatureTable test_table = table.subset(folds[f]);
  const std::uint64_t fold_seed = derive_seed(options.seed, f);

  auto [ensemble, report] = fit_stack(train_table, spec, fold_seed);
  FoldOutcome out;
  out.estimates = ensemble.predict(test_table.features());
  const auto& actual = test_table.targets();
  out.result.fold = f;
  out.result.n = actual.size();
  out.result.rmse = rmse(out.estimates, actual);
  out.result.r2_determination = r_squared(out.estimates, actual, R2Mode::determination);
  out.result.r2_pearson_sq = r_squared(out.estimates, actual, R2Mode::pearson_sq);
  out.result.r2 = options.r2_mode == R2Mode::determination ? out.result.r2_determination
                                                           : out.result.r2_pearson_sq;
  if (options.compute_importance) {
    out.importance = permutation_importance(ensemble, test_table.features(), actual,
                                            options.importance_repeats,
                                            derive_seed(fold_seed, "importance"));
  }
  return out;
}

double mean_of(const std::vector<FoldResult>& folds, double FoldResult::*field) {
  double sum = 0.0;
  for (const auto& f : folds) sum += f.*field;
  return sum / static_cast<double>(folds.size());
}

}  // namespace

EvalReport cross_validate(const FeatureTable& table, const StackSpec& spec,
                          const CvOptions& options) {
  spec.validate();
  if (options.k < 2 || options.k > table.size()) {
    throw DataError("k must satisfy 2 <= k <= " + std::to_string(table.size()));
  }
  if (options.compute_importance && options.importance_repeats < 1) {
    throw DataError("importance repeats must be >= 1");
  }
  const auto folds = kfold_split(table.size(), options.k, options.seed);

  std::vector<std::optional<FoldOutcome>> outcomes(options.k);
  std::vector<std::exception_ptr> errors(options.k);
  auto work = [&](std::size_t f) {
    try {
      outcomes[f] = run_fold(table, spec, options, folds, f);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, options.k);
  if (threads == 1) {
    for (std::size_t f = 0; f < options.k; ++f) work(f);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t f = t; f < options.k; f += threads) work(f);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalReport report;
  report.seed = options.seed;
  report.k = options.k;
  report.r2_mode = options.r2_mode;
  if (options.compute_importance) report.importance.assign(kFeatureCount, 0.0);
  for (std::size_t f = 0; f < options.k; ++f) {
    const FoldOutcome& o = *outcomes[f];
    report.per_fold.push_back(o.result);
    for (std::size_t i = 0; i < folds[f].size(); ++i) {
      const std::size_t row = folds[f][i];
      report.predictions.push_back(
          {table.ids()[row], table.targets()[row], o.estimates[i], f});
    }
    for (std::size_t j = 0; j < o.importance.size(); ++j) report.importance[j] += o.importance[j];
  }
  for (double& v : report.importance) v /= static_cast<double>(options.k);
  report.mean_r2 = mean_of(report.per_fold, &FoldResult::r2);
  report.mean_r2_determination = mean_of(report.per_fold, &FoldResult::r2_determination);
  report.mean_r2_pearson_sq = mean_of(report.per_fold, &FoldResult::r2_pearson_sq);
  report.mean_rmse = mean_of(report.per_fold, &FoldResult::rmse);
  report.config = {{"stack", spec.to_json()},
                   {"k", options.k},
                   {"seed", options.seed},
                   {"r2_mode", to_string(options.r2_mode)},
                   {"importance_repeats", options.importance_repeats},
                   {"compute_importance", options.compute_importance}};
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : per_fold) {
    folds.push_back({{"fold", f.fold},
                     {"n", f.n},
                     {"r2", f.r2},
                     {"r2_determination", f.r2_determination},
                     {"r2_pearson_sq", f.r2_pearson_sq},
                     {"rmse", f.rmse}});
  }
  nlohmann::json imp = nlohmann::json::object();
  for (std::size_t j = 0; j < importance.size(); ++j) {
    imp[std::string(kFeatureNames[j])] = importance[j];
  }
  nlohmann::json j = {{"k", k},
                      {"seed", seed},
                      {"r2_mode", to_string(r2_mode)},
                      {"per_fold", folds},
                      {"mean_r2", mean_r2},
                      {"mean_r2_determination", mean_r2_determination},
                      {"mean_r2_pearson_sq", mean_r2_pearson_sq},
                      {"mean_rmse", mean_rmse},
                      {"config", config}};
  if (!importance.empty()) j["importance"] = imp;
  return j;
}

std::vector<double> normalize_importance(std::vector<double> raw) {
  double total = 0.0;
  for (double& v : raw) {
    v = std::max(v, 0.0);
    total += v;
  }
  if (raw.empty()) return raw;
  if (total <= 0.0) {
    std::fill(raw.begin(), raw.end(), 1.0 / static_cast<double>(raw.size()));
    return raw;
  }
  for (double& v : raw) v /= total;
  return raw;
}

std::vector<double> permutation_increases(const StackEnsemble& ensemble, const Matrix& x,
                                          std::span<const double> y, std::size_t repeats,
                                          std::uint64_t seed) {
  if (repeats < 1) throw DataError("importance repeats must be >= 1");
  if (x.cols() != ensemble.feature_count()) {
    throw DataError("importance: table has " + std::to_string(x.cols()) +
                    " features, model expects " + std::to_string(ensemble.feature_count()));
  }
  if (x.rows() != y.size() || x.rows() == 0) throw DataError("importance: bad row count");
  const double baseline = rmse(ensemble.predict(x), y);
  std::vector<double> increases(x.cols(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const std::uint64_t feature_seed = derive_seed(seed, j);
    double sum = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      std::vector<double> column = x.column(j);
      Rng rng(derive_seed(feature_seed, r));
      rng.shuffle(std::span<double>(column));
      Matrix shuffled = x;
      for (std::size_t i = 0; i < x.rows(); ++i) shuffled(i, j) = column[i];
      sum += rmse(ensemble.predict(shuffled), y) - baseline;
    }
    increases[j] = sum / static_cast<double>(repeats);
  }
  return increases;
}

std::vector<double> permutation_importance(const StackEnsemble& ensemble, const Matrix& x,
                                           std::span<const double> y, std::size_t repeats,
                                           std::uint64_t seed) {
  return normalize_importance(permutation_increases(ensemble, x, y, repeats, seed));
}

std::vector<double> permutation_importance(const StackEnsemble& ensemble,
                                           const FeatureTable& table, std::size_t repeats,
                                           std::uint64_t seed) {
  return permutation_importance(ensemble, table.features(), table.targets(), repeats, seed);
}

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

// Round-number tick step giving roughly `target` intervals over `span`.
double tick_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_scatter(std::span<const double> estimates, std::span<const double> actuals,
                           const ScatterAnnotation& note) {
  if (estimates.empty() || estimates.size() != actuals.size()) {
    throw DataError("scatter needs equal, non-empty estimate and actual vectors");
  }
  double lo = actuals[0], hi = actuals[0];
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!std::isfinite(estimates[i]) || !std::isfinite(actuals[i])) {
      throw DataError("scatter values must be finite");
    }
    lo = std::min({lo, estimates[i], actuals[i]});
    hi = std::max({hi, estimates[i], actuals[i]});
  }
  const double data_lo = lo, data_hi = hi;
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  constexpr double size = 600, left = 80, top = 40, plot = 480;
  auto px = [&](double v) { return left + (v - lo) / (hi - lo) * plot; };
  auto py = [&](double v) { return top + plot - (v - lo) / (hi - lo) * plot; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(size, 0) +
         "\" height=\"" + fixed(size, 0) + "\" viewBox=\"0 0 " + fixed(size, 0) + " " +
         fixed(size, 0) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fixed(size, 0) + "\" height=\"" + fixed(size, 0) +
         "\" fill=\"white\"/>\n";

  // Frame and ticks as paths so the only <line> is the 1:1 reference.
  std::string frame = "M" + fixed(left) + "," + fixed(top) + " V" + fixed(top + plot) + " H" +
                      fixed(left + plot);
  const double step = tick_step(hi - lo, 5);
  std::string labels;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    const double tx = px(t), ty = py(t);
    frame += " M" + fixed(tx) + "," + fixed(top + plot) + " v5";
    frame += " M" + fixed(left) + "," + fixed(ty) + " h-5";
    const int digits = step >= 1.0 ? 0 : (step >= 0.1 ? 1 : 2);
    labels += "<text x=\"" + fixed(tx) + "\" y=\"" + fixed(top + plot + 20) +
              "\" text-anchor=\"middle\">" + fixed(t, digits) + "</text>\n";
    labels += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(ty + 4) +
              "\" text-anchor=\"end\">" + fixed(t, digits) + "</text>\n";
  }
  svg += "<path d=\"" + frame + "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += labels;

  svg += "<line x1=\"" + fixed(px(data_lo)) + "\" y1=\"" + fixed(py(data_lo)) + "\" x2=\"" +
         fixed(px(data_hi)) + "\" y2=\"" + fixed(py(data_hi)) +
         "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";

  svg += "<g fill=\"steelblue\" fill-opacity=\"0.7\" stroke=\"none\">\n";
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    svg += "<circle cx=\"" + fixed(px(actuals[i])) + "\" cy=\"" + fixed(py(estimates[i])) +
           "\" r=\"3\"/>\n";
  }
  svg += "</g>\n";

  svg += "<text x=\"" + fixed(left + plot / 2) + "\" y=\"" + fixed(size - 25) +
         "\" text-anchor=\"middle\">Actual yield (tons ha⁻¹)</text>\n";
  svg += "<text x=\"20\" y=\"" + fixed(top + plot / 2) + "\" text-anchor=\"middle\" " +
         "transform=\"rotate(-90 20 " + fixed(top + plot / 2) +
         ")\">Estimated yield (tons ha⁻¹)</text>\n";
  svg += "<text x=\"" + fixed(left + 10) + "\" y=\"" + fixed(top + 18) + "\">" + note.r2_label +
         " = " + fixed(note.r2, 4) + "</text>\n";
  svg += "<text x=\"" + fixed(left + 10) + "\" y=\"" + fixed(top + 36) + "\">RMSE = " +
         fixed(note.rmse, 3) + " tons ha⁻¹</text>\n";
  svg += "</svg>\n";
  return svg;
}

void emit_scatter(std::span<const double> estimates, std::span<const double> actuals,
                  const std::filesystem::path& path, const ScatterAnnotation& note) {
  const std::string svg = render_scatter(estimates, actuals, note);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << svg;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_predictions_csv(std::span<const HeldOutPrediction> rows,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,actual,estimated,fold\n";
  for (const auto& r : rows) {
    out << r.id << ',' << format_double(r.actual) << ',' << format_double(r.estimated) << ','
        << r.fold << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace olive
