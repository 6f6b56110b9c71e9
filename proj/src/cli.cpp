#include "olive/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "olive/error.hpp"
#include "olive/evaluation.hpp"
#include "olive/features.hpp"
#include "olive/indices.hpp"
#include "olive/learn/stack.hpp"
#include "olive/preprocess.hpp"
#include "olive/raster.hpp"
#include "olive/synth.hpp"

namespace olive::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path, int indent = 2) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(indent) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<GridRaster> read_all(const std::vector<std::string>& paths) {
  std::vector<GridRaster> out;
  for (const auto& p : paths) out.push_back(read_raster(p));
  return out;
}

// Writes <out>/<name>.json (+ .bin) and a <name>.run.json manifest echoing
// the command's resolved settings.
void emit_raster(const GridRaster& r, const fs::path& out, const std::string& name,
                 const std::string& command, json config) {
  ensure_dir(out);
  const fs::path header = out / (name + ".json");
  write_raster(r, header);
  write_json({{"command", command},
              {"config", std::move(config)},
              {"output", header.string()},
              {"width", r.width()},
              {"height", r.height()},
              {"band_names", r.band_names()}},
             out / (name + ".run.json"));
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

// Settings shared by train and cv: an optional JSON config with keys
// "stack", "k", "seed", "r2_mode", "importance_repeats", "threads",
// "tuning_budget"; command-line flags take precedence.
struct LearnFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::string> r2_mode;
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> tuning_budget;
};

struct LearnSettings {
  StackSpec stack;
  std::uint64_t seed = 42;
  std::size_t k = 5;
  R2Mode r2_mode = R2Mode::determination;
  std::size_t repeats = 5;
  std::size_t threads = 1;
};

LearnSettings resolve(const LearnFlags& f, const json& base) {
  LearnSettings s;
  s.stack = base.contains("stack") ? StackSpec::from_json(base.at("stack")) : default_stack_spec();
  s.seed = f.seed.value_or(get_or<std::uint64_t>(base, "seed", 42));
  s.k = f.k.value_or(get_or<std::size_t>(base, "k", 5));
  s.r2_mode = parse_r2_mode(f.r2_mode.value_or(get_or<std::string>(base, "r2_mode", "determination")));
  s.repeats = f.repeats.value_or(get_or<std::size_t>(base, "importance_repeats", 5));
  s.threads = f.threads.value_or(get_or<std::size_t>(base, "threads", 1));
  s.stack.k = s.k;
  if (f.tuning_budget) s.stack.tuning_budget = *f.tuning_budget;
  else if (base.contains("tuning_budget")) s.stack.tuning_budget = get_or<std::size_t>(base, "tuning_budget", 0);
  s.stack.validate();
  return s;
}

LearnSettings resolve(const LearnFlags& f) {
  return resolve(f, f.config.empty() ? json::object() : read_json(f.config));
}

EvalReport run_cv(const FeatureTable& table, const LearnSettings& s, const fs::path& out,
                  json echo) {
  CvOptions opt;
  opt.k = s.k;
  opt.seed = s.seed;
  opt.r2_mode = s.r2_mode;
  opt.importance_repeats = s.repeats;
  opt.threads = s.threads;
  EvalReport report = cross_validate(table, s.stack, opt);
  report.config["threads"] = s.threads;
  for (auto& [key, value] : echo.items()) report.config[key] = value;

  ensure_dir(out);
  write_json(report.to_json(), out / "eval_report.json");
  std::vector<double> est, act;
  for (const auto& p : report.predictions) {
    est.push_back(p.estimated);
    act.push_back(p.actual);
  }
  ScatterAnnotation note;
  note.r2 = report.mean_r2;
  note.rmse = report.mean_rmse;
  note.r2_label = s.r2_mode == R2Mode::determination ? "mean R²" : "mean r²";
  emit_scatter(est, act, out / "scatter.svg", note);
  write_predictions_csv(report.predictions, out / "predictions.csv");
  return report;
}

json dropped_json(const std::vector<DroppedPoint>& dropped) {
  json d = json::array();
  for (const auto& p : dropped) d.push_back({{"id", p.id}, {"reason", p.reason}});
  return d;
}

json importance_json(const std::vector<double>& values) {
  json j = json::object();
  for (std::size_t i = 0; i < values.size() && i < kFeatureNames.size(); ++i) {
    j[std::string(kFeatureNames[i])] = values[i];
  }
  return j;
}

// Pipeline: synth or inputs -> preprocess -> indices -> dem -> sample -> cv.
struct PipelineFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::string> strategy;
  std::optional<std::string> r2_mode;
  std::string out = "pipeline_out";
};

void run_pipeline(const PipelineFlags& f, std::ostream& log) {
  const json cfg = f.config.empty() ? json::object() : read_json(f.config);
  if (!cfg.is_object()) throw ConfigError("pipeline config must be a JSON object");
  static const std::vector<std::string> known = {"seed", "synth", "inputs", "preprocess",
                                                 "indices", "sample", "cv", "stack"};
  for (const auto& [key, _] : cfg.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown pipeline key: " + key);
    }
  }
  if (cfg.contains("synth") && cfg.contains("inputs")) {
    throw ConfigError("pipeline config takes either 'synth' or 'inputs', not both");
  }
  const std::uint64_t seed = f.seed.value_or(get_or<std::uint64_t>(cfg, "seed", 42));
  const fs::path out = f.out;
  ensure_dir(out);
  json resolved = json::object();
  resolved["seed"] = seed;

  // Step 1: imagery, DEM and survey points.
  GridRaster composite = GridRaster::filled(1, 1, {"x"}, {0, 1, 0, -1}, "", -9999.0f);
  GridRaster dem = composite;
  std::vector<SurveyPoint> points;
  if (cfg.contains("inputs")) {
    const json& in = cfg.at("inputs");
    if (in.contains("bands")) {
      const auto bands = read_all(in.at("bands").get<std::vector<std::string>>());
      composite = band_composite(bands);
    } else {
      composite = read_raster(get_or<std::string>(in, "reference", ""));
    }
    dem = read_raster(get_or<std::string>(in, "dem", ""));
    points = read_points_csv(get_or<std::string>(in, "points", ""));
    resolved["inputs"] = in;

    const json pre = cfg.value("preprocess", json::object());
    const auto scenes = read_all(get_or<std::vector<std::string>>(in, "scenes", {}));
    const bool match_first = get_or<bool>(pre, "match_first", true);
    const auto bins = get_or<std::size_t>(pre, "bins", kDefaultHistogramBins);
    json pre_echo = {{"match_first", match_first}, {"bins", bins}};
    if (!scenes.empty()) composite = mosaic(composite, scenes, match_first, bins);
    if (pre.contains("rescale")) {
      const json& rs = pre.at("rescale");
      const double gain = get_or<double>(rs, "gain", kCollection2Gain);
      const double offset = get_or<double>(rs, "offset", kCollection2Offset);
      const bool clamp01 = get_or<bool>(rs, "clamp01", true);
      composite = rescale_linear(composite, gain, offset, clamp01);
      pre_echo["rescale"] = {{"gain", gain}, {"offset", offset}, {"clamp01", clamp01}};
    }
    if (pre.contains("clip")) {
      const auto b = get_or<std::vector<double>>(pre, "clip", {});
      if (b.size() != 4) throw ConfigError("preprocess.clip must be [min_x, min_y, max_x, max_y]");
      const BBox box{b[0], b[1], b[2], b[3]};
      composite = clip(composite, box);
      dem = clip(dem, box);
      pre_echo["clip"] = b;
    }
    resolved["preprocess"] = pre_echo;
  } else {
    const SynthSpec spec = SynthSpec::from_json(cfg.value("synth", json::object()));
    const SynthScene scene = generate_scene(spec, seed);
    points = generate_survey(spec, scene, seed);
    composite = scene.composite;
    dem = scene.dem;
    write_raster(composite, out / "composite.json");
    write_raster(dem, out / "dem.json");
    write_points_csv(points, out / "points.csv");
    json echo = spec.to_json();
    echo["seed"] = seed;
    resolved["synth"] = echo;
  }
  log << "composite: " << composite.width() << "x" << composite.height() << ", "
      << points.size() << " survey points\n";

  // Steps 2-3: indices and DEM.
  IndexParams ip;
  ip.savi_l = get_or<double>(cfg.value("indices", json::object()), "savi_l", ip.savi_l);
  ip.validate();
  resolved["indices"] = {{"savi_l", ip.savi_l}};
  const GridRaster stack13 = attach_dem(compute_index_stack(composite, ip), dem);
  write_raster(stack13, out / "stack13.json");

  // Feature table.
  const SampleStrategy strategy = parse_strategy(
      f.strategy.value_or(get_or<std::string>(cfg.value("sample", json::object()), "strategy", "nearest")));
  const SampleResult sampled = sample_at_points(stack13, points, strategy);
  resolved["sample"] = {{"strategy", to_string(strategy)}};
  write_table_csv(sampled.table, out / "features.csv");
  log << "features: " << sampled.table.size() << " rows, " << sampled.dropped.size()
      << " dropped\n";

  // Step 4: stacked ensemble under k-fold CV.
  json learn = cfg.value("cv", json::object());
  if (cfg.contains("stack")) learn["stack"] = cfg.at("stack");
  learn["seed"] = seed;
  LearnFlags lf;
  lf.k = f.k;
  lf.r2_mode = f.r2_mode;
  const LearnSettings s = resolve(lf, learn);
  const EvalReport report = run_cv(sampled.table, s, out, {{"pipeline", resolved}});
  log << "cv: mean R2 " << report.mean_r2 << ", mean RMSE " << report.mean_rmse << "\n";

  resolved["cv"] = report.config;
  write_json({{"command", "pipeline"},
              {"config", resolved},
              {"dropped_points", dropped_json(sampled.dropped)},
              {"outputs",
               {"features.csv", "stack13.json", "eval_report.json", "scatter.svg",
                "predictions.csv"}}},
             out / "pipeline.run.json");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Olive yield estimation from multiband imagery and elevation.", "olive-yield"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // composite
  std::vector<std::string> c_bands;
  std::string c_out = ".", c_name = "composite";
  auto* composite = app.add_subcommand("composite", "Stack single-band rasters into one composite");
  composite->add_option("--bands", c_bands, "Single-band raster headers, in band order")->required();
  composite->add_option("--out", c_out, "Output directory");
  composite->add_option("--name", c_name, "Output raster name");

  // rescale
  std::string r_in, r_out = ".", r_name = "rescaled";
  double r_gain = kCollection2Gain, r_offset = kCollection2Offset;
  bool r_clamp = false;
  auto* rescale = app.add_subcommand("rescale", "Linear gain/offset rescaling of valid samples");
  rescale->add_option("--input", r_in, "Raster header")->required();
  rescale->add_option("--gain", r_gain, "Multiplicative gain")->capture_default_str();
  rescale->add_option("--offset", r_offset, "Additive offset")->capture_default_str();
  rescale->add_flag("--clamp01", r_clamp, "Clamp results to [0, 1]");
  rescale->add_option("--out", r_out, "Output directory");
  rescale->add_option("--name", r_name, "Output raster name");

  // match
  std::string m_src, m_ref, m_out = ".", m_name = "matched";
  std::size_t m_bins = kDefaultHistogramBins;
  auto* match = app.add_subcommand("match", "Histogram-match a source raster onto a reference");
  match->add_option("--source", m_src, "Source raster header")->required();
  match->add_option("--reference", m_ref, "Reference raster header")->required();
  match->add_option("--bins", m_bins, "Histogram bins")->capture_default_str();
  match->add_option("--out", m_out, "Output directory");
  match->add_option("--name", m_name, "Output raster name");

  // mosaic
  std::string mo_ref, mo_out = ".", mo_name = "mosaic";
  std::vector<std::string> mo_scenes;
  bool mo_match = false;
  std::size_t mo_bins = kDefaultHistogramBins;
  auto* mosaic_cmd = app.add_subcommand("mosaic", "Mosaic scenes onto the union extent");
  mosaic_cmd->add_option("--reference", mo_ref, "Reference scene (wins overlaps)")->required();
  mosaic_cmd->add_option("--scenes", mo_scenes, "Other scenes, highest priority first");
  mosaic_cmd->add_flag("--match-first", mo_match, "Histogram-match scenes to the reference");
  mosaic_cmd->add_option("--bins", mo_bins, "Histogram bins")->capture_default_str();
  mosaic_cmd->add_option("--out", mo_out, "Output directory");
  mosaic_cmd->add_option("--name", mo_name, "Output raster name");

  // clip
  std::string cl_in, cl_out = ".", cl_name = "clipped";
  std::vector<double> cl_box;
  auto* clip_cmd = app.add_subcommand("clip", "Clip a raster to a bounding box");
  clip_cmd->add_option("--input", cl_in, "Raster header")->required();
  clip_cmd->add_option("--bbox", cl_box, "min_x min_y max_x max_y")->required()->expected(4);
  clip_cmd->add_option("--out", cl_out, "Output directory");
  clip_cmd->add_option("--name", cl_name, "Output raster name");

  // indices
  std::string i_in, i_out = ".", i_name = "stack12";
  double i_l = 0.5;
  auto* indices = app.add_subcommand("indices", "Append the five spectral indices to a 7-band composite");
  indices->add_option("--input", i_in, "7-band composite header")->required();
  indices->add_option("--savi-l", i_l, "SAVI soil factor L")->capture_default_str();
  BandRoles i_roles;
  indices->add_option("--green", i_roles.green, "1-based green band")->capture_default_str();
  indices->add_option("--red", i_roles.red, "1-based red band")->capture_default_str();
  indices->add_option("--nir", i_roles.nir, "1-based near-infrared band")->capture_default_str();
  indices->add_option("--swir1", i_roles.swir1, "1-based SWIR1 band")->capture_default_str();
  indices->add_option("--out", i_out, "Output directory");
  indices->add_option("--name", i_name, "Output raster name");

  // attach-dem
  std::string a_stack, a_dem, a_out = ".", a_name = "stack13";
  auto* attach = app.add_subcommand("attach-dem", "Append a DEM as band 13");
  attach->add_option("--stack", a_stack, "12-band stack header")->required();
  attach->add_option("--dem", a_dem, "Single-band DEM header")->required();
  attach->add_option("--out", a_out, "Output directory");
  attach->add_option("--name", a_name, "Output raster name");

  // sample
  std::string s_stack, s_points, s_out = ".", s_strategy = "nearest";
  auto* sample = app.add_subcommand("sample", "Sample the 13-band stack at survey points");
  sample->add_option("--stack", s_stack, "13-band stack header")->required();
  sample->add_option("--points", s_points, "Survey points CSV")->required();
  sample->add_option("--strategy", s_strategy, "nearest|mean3x3")->capture_default_str();
  sample->add_option("--out", s_out, "Output directory");

  // train / cv share learning flags
  LearnFlags t_flags, v_flags;
  std::string t_table, t_out = ".", v_table, v_out = ".";
  bool t_timing = false;
  auto add_learn = [](CLI::App* cmd, LearnFlags& f) {
    cmd->add_option("--config", f.config, "JSON config (stack, k, seed, ...)");
    cmd->add_option("--seed", f.seed, "Top-level seed");
    cmd->add_option("--k", f.k, "Fold count");
    cmd->add_option("--tuning-budget", f.tuning_budget, "Random-search configs per member");
  };
  auto* train = app.add_subcommand("train", "Fit the stacked ensemble on a feature table");
  train->add_option("--table", t_table, "Feature CSV")->required();
  add_learn(train, t_flags);
  train->add_flag("--timing", t_timing, "Include wall-clock time in the report");
  train->add_option("--out", t_out, "Output directory");

  auto* cv = app.add_subcommand("cv", "Cross-validate the stacked ensemble");
  cv->add_option("--table", v_table, "Feature CSV")->required();
  add_learn(cv, v_flags);
  cv->add_option("--r2-mode", v_flags.r2_mode, "determination|pearson_sq");
  cv->add_option("--repeats", v_flags.repeats, "Permutation-importance repeats");
  cv->add_option("--threads", v_flags.threads, "Folds evaluated concurrently");
  cv->add_option("--out", v_out, "Output directory");

  // importance
  std::string im_model, im_table, im_out = ".";
  std::uint64_t im_seed = 42;
  std::size_t im_repeats = 5;
  auto* importance = app.add_subcommand("importance", "Permutation importance of a trained model");
  importance->add_option("--model", im_model, "Model JSON from train")->required();
  importance->add_option("--table", im_table, "Feature CSV")->required();
  importance->add_option("--repeats", im_repeats, "Shuffles per feature")->capture_default_str();
  importance->add_option("--seed", im_seed, "Shuffle seed")->capture_default_str();
  importance->add_option("--out", im_out, "Output directory");

  // synth
  std::string sy_config, sy_out = ".";
  std::optional<std::uint64_t> sy_seed;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene, DEM and survey");
  synth->add_option("--config", sy_config, "Synthetic spec JSON");
  synth->add_option("--seed", sy_seed, "Seed (overrides the config)");
  synth->add_option("--out", sy_out, "Output directory");

  // pipeline
  PipelineFlags p;
  auto* pipeline = app.add_subcommand("pipeline", "Run every step from one config file");
  pipeline->add_option("--config", p.config, "Pipeline config JSON");
  pipeline->add_option("--seed", p.seed, "Top-level seed");
  pipeline->add_option("--k", p.k, "Fold count");
  pipeline->add_option("--strategy", p.strategy, "nearest|mean3x3");
  pipeline->add_option("--r2-mode", p.r2_mode, "determination|pearson_sq");
  pipeline->add_option("--out", p.out, "Output directory")->capture_default_str();

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    err << "olive-yield: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "olive-yield: " << e.what() << "\n\n";
    // Show the failing subcommand's help when one was selected.
    const auto chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return kUsage;
  }

  try {
    if (*composite) {
      emit_raster(band_composite(read_all(c_bands)), c_out, c_name, "composite",
                  {{"bands", c_bands}});
    } else if (*rescale) {
      emit_raster(rescale_linear(read_raster(r_in), r_gain, r_offset, r_clamp), r_out, r_name,
                  "rescale",
                  {{"input", r_in}, {"gain", r_gain}, {"offset", r_offset}, {"clamp01", r_clamp}});
    } else if (*match) {
      emit_raster(histogram_match(read_raster(m_src), read_raster(m_ref), m_bins), m_out, m_name,
                  "match", {{"source", m_src}, {"reference", m_ref}, {"bins", m_bins}});
    } else if (*mosaic_cmd) {
      emit_raster(mosaic(read_raster(mo_ref), read_all(mo_scenes), mo_match, mo_bins), mo_out,
                  mo_name, "mosaic",
                  {{"reference", mo_ref},
                   {"scenes", mo_scenes},
                   {"match_first", mo_match},
                   {"bins", mo_bins}});
    } else if (*clip_cmd) {
      const BBox box{cl_box[0], cl_box[1], cl_box[2], cl_box[3]};
      emit_raster(clip(read_raster(cl_in), box), cl_out, cl_name, "clip",
                  {{"input", cl_in}, {"bbox", cl_box}});
    } else if (*indices) {
      IndexParams ip;
      ip.savi_l = i_l;
      ip.roles = i_roles;
      emit_raster(compute_index_stack(read_raster(i_in), ip), i_out, i_name, "indices",
                  {{"input", i_in},
                   {"savi_l", i_l},
                   {"roles",
                    {{"green", i_roles.green},
                     {"red", i_roles.red},
                     {"nir", i_roles.nir},
                     {"swir1", i_roles.swir1}}}});
    } else if (*attach) {
      emit_raster(attach_dem(read_raster(a_stack), read_raster(a_dem)), a_out, a_name,
                  "attach-dem", {{"stack", a_stack}, {"dem", a_dem}});
    } else if (*sample) {
      const SampleStrategy strategy = parse_strategy(s_strategy);
      const SampleResult r =
          sample_at_points(read_raster(s_stack), read_points_csv(s_points), strategy);
      ensure_dir(s_out);
      write_table_csv(r.table, fs::path(s_out) / "features.csv");
      write_json({{"command", "sample"},
                  {"config",
                   {{"stack", s_stack}, {"points", s_points}, {"strategy", to_string(strategy)}}},
                  {"rows", r.table.size()},
                  {"dropped_points", dropped_json(r.dropped)}},
                 fs::path(s_out) / "sample.run.json");
      out << r.table.size() << " rows written, " << r.dropped.size() << " points dropped\n";
    } else if (*train) {
      const LearnSettings s = resolve(t_flags);
      const FeatureTable table = read_table_csv(t_table);
      auto [ensemble, report] = fit_stack(table, s.stack, s.seed);
      const json config = {{"table", t_table}, {"stack", s.stack.to_json()}, {"seed", s.seed}};
      json model = ensemble.to_json();
      model["config"] = config;
      json rep = report.to_json(t_timing);
      rep["config"] = config;
      ensure_dir(t_out);
      write_json(model, fs::path(t_out) / "model.json", -1);
      write_json(rep, fs::path(t_out) / "train_report.json");
      out << "ensemble oof RMSE " << report.ensemble_oof_rmse << "\n";
    } else if (*cv) {
      const LearnSettings s = resolve(v_flags);
      const EvalReport report =
          run_cv(read_table_csv(v_table), s, v_out, {{"table", v_table}});
      out << "mean R2 " << report.mean_r2 << ", mean RMSE " << report.mean_rmse << "\n";
    } else if (*importance) {
      const StackEnsemble ensemble = StackEnsemble::from_json(read_json(im_model));
      const FeatureTable table = read_table_csv(im_table);
      const auto raw = permutation_increases(ensemble, table.features(), table.targets(),
                                             im_repeats, im_seed);
      ensure_dir(im_out);
      write_json({{"config",
                   {{"model", im_model},
                    {"table", im_table},
                    {"repeats", im_repeats},
                    {"seed", im_seed}}},
                  {"importance", importance_json(normalize_importance(raw))},
                  {"raw_increase", importance_json(raw)}},
                 fs::path(im_out) / "importance.json");
    } else if (*synth) {
      SynthSpec spec = sy_config.empty() ? SynthSpec{} : SynthSpec::from_json(read_json(sy_config));
      if (sy_seed) spec.seed = *sy_seed;
      const SynthScene scene = generate_scene(spec);
      const auto points = generate_survey(spec, scene);
      const fs::path dir = sy_out;
      ensure_dir(dir);
      write_raster(scene.composite, dir / "composite.json");
      write_raster(scene.dem, dir / "dem.json");
      write_points_csv(points, dir / "points.csv");
      write_json({{"command", "synth"},
                  {"config", spec.to_json()},
                  {"outputs", {"composite.json", "dem.json", "points.csv"}}},
                 dir / "synth.run.json");
    } else if (*pipeline) {
      run_pipeline(p, out);
    }
  } catch (const DataError& e) {
    err << "olive-yield: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << "olive-yield: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "olive-yield: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

}  // namespace olive::cli
