#include "olive/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "olive/error.hpp"
#include "olive/indices.hpp"
#include "olive/random.hpp"

namespace olive {

namespace {

constexpr double kOriginX = 500000.0;
constexpr double kOriginY = 4000000.0;
constexpr double kPixel = 30.0;
constexpr float kNodata = -9999.0f;
constexpr const char* kCrs = "EPSG:32632";

// Reflectance range per band (coastal, blue, green, red, nir, swir1, swir2).
constexpr std::array<std::array<double, 2>, 7> kBandRange = {{
    {0.02, 0.12}, {0.03, 0.15}, {0.05, 0.20}, {0.03, 0.25},
    {0.20, 0.60}, {0.10, 0.40}, {0.05, 0.30}}};

constexpr double kRampSteepness = 12.0;
constexpr double kDemNoise = 0.15;

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Bilinear value noise in [0, 1) over a lattice with `cell`-pixel spacing.
double value_noise(std::uint64_t seed, std::size_t col, std::size_t row, double cell) {
  const double fx = static_cast<double>(col) / cell;
  const double fy = static_cast<double>(row) / cell;
  const auto ix = static_cast<std::uint64_t>(fx);
  const auto iy = static_cast<std::uint64_t>(fy);
  const double tx = smooth(fx - static_cast<double>(ix));
  const double ty = smooth(fy - static_cast<double>(iy));
  const double v00 = hash_unit(seed, ix, iy, 0), v10 = hash_unit(seed, ix + 1, iy, 0);
  const double v01 = hash_unit(seed, ix, iy + 1, 0), v11 = hash_unit(seed, ix + 1, iy + 1, 0);
  const double top = v00 + (v10 - v00) * tx;
  const double bottom = v01 + (v11 - v01) * tx;
  return top + (bottom - top) * ty;
}

// Two octaves, weights 2/3 and 1/3.
double field(std::uint64_t seed, std::size_t col, std::size_t row) {
  return (2.0 * value_noise(seed, col, row, 16.0) +
          value_noise(derive_seed(seed, "octave-2"), col, row, 5.0)) / 3.0;
}

GeoTransform synth_transform() { return {kOriginX, kPixel, kOriginY, -kPixel}; }

}  // namespace

void SynthSpec::validate() const {
  if (width < 2 || height < 2) throw ConfigError("synth width and height must be >= 2");
  if (n_points < 10) throw ConfigError("synth n_points must be >= 10");
  if (n_points > width * height) throw ConfigError("synth n_points exceeds pixel count");
  if (!std::isfinite(elevation_min) || !std::isfinite(elevation_max) ||
      !(elevation_min < elevation_max)) {
    throw ConfigError("synth elevation range must satisfy min < max");
  }
  for (double v : {base_yield, elev_coeff, elev_quad_coeff, ndvi_coeff, ndwi_coeff}) {
    if (!std::isfinite(v)) throw ConfigError("synth coefficients must be finite");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw ConfigError("synth noise_sd must be >= 0");
  }
}

nlohmann::json SynthSpec::to_json() const {
  return {{"width", width},
          {"height", height},
          {"n_points", n_points},
          {"elevation_range", {elevation_min, elevation_max}},
          {"base_yield", base_yield},
          {"elev_coeff", elev_coeff},
          {"elev_quad_coeff", elev_quad_coeff},
          {"ndvi_coeff", ndvi_coeff},
          {"ndwi_coeff", ndwi_coeff},
          {"noise_sd", noise_sd},
          {"seed", seed}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synth spec must be a JSON object");
  static const std::set<std::string> known = {
      "width",      "height",          "n_points",   "elevation_range",
      "base_yield", "elev_coeff",      "elev_quad_coeff", "ndvi_coeff",
      "ndwi_coeff", "noise_sd",        "seed"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown synth key: " + key);
  }
  SynthSpec s;
  try {
    if (j.contains("width")) s.width = j.at("width").get<std::size_t>();
    if (j.contains("height")) s.height = j.at("height").get<std::size_t>();
    if (j.contains("n_points")) s.n_points = j.at("n_points").get<std::size_t>();
    if (j.contains("elevation_range")) {
      const auto r = j.at("elevation_range").get<std::vector<double>>();
      if (r.size() != 2) throw ConfigError("elevation_range must be [min, max]");
      s.elevation_min = r[0];
      s.elevation_max = r[1];
    }
    if (j.contains("base_yield")) s.base_yield = j.at("base_yield").get<double>();
    if (j.contains("elev_coeff")) s.elev_coeff = j.at("elev_coeff").get<double>();
    if (j.contains("elev_quad_coeff")) s.elev_quad_coeff = j.at("elev_quad_coeff").get<double>();
    if (j.contains("ndvi_coeff")) s.ndvi_coeff = j.at("ndvi_coeff").get<double>();
    if (j.contains("ndwi_coeff")) s.ndwi_coeff = j.at("ndwi_coeff").get<double>();
    if (j.contains("noise_sd")) s.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthScene generate_scene(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t w = spec.width, h = spec.height, n = w * h;
  const std::uint64_t scene_seed = derive_seed(seed, "scene");

  std::vector<float> bands(7 * n);
  for (std::size_t b = 0; b < 7; ++b) {
    const std::uint64_t band_seed = derive_seed(scene_seed, b);
    const auto [lo, hi] = kBandRange[b];
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        bands[b * n + r * w + c] = static_cast<float>(lo + (hi - lo) * field(band_seed, c, r));
      }
    }
  }

  const std::uint64_t dem_seed = derive_seed(scene_seed, "dem");
  std::vector<double> raw(n);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double t = (static_cast<double>(c) + 0.5) / static_cast<double>(w);
      const double ramp = 1.0 / (1.0 + std::exp(-kRampSteepness * (t - 0.5)));
      raw[r * w + c] = ramp + kDemNoise * (field(dem_seed, c, r) - 0.5);
    }
  }
  const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
  const double raw_lo = *mn, raw_span = *mx - *mn;
  const double span = spec.elevation_max - spec.elevation_min;
  std::vector<float> dem(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = raw_span > 0.0 ? (raw[i] - raw_lo) / raw_span : 0.0;
    const double e = std::clamp(spec.elevation_min + u * span, spec.elevation_min,
                                spec.elevation_max);
    // Keep the float32 value inside the range after rounding.
    float f = static_cast<float>(e);
    if (f < spec.elevation_min) f = std::nextafter(f, INFINITY);
    if (f > spec.elevation_max) f = std::nextafter(f, -INFINITY);
    dem[i] = f;
  }

  std::vector<std::string> names;
  for (int b = 1; b <= 7; ++b) names.push_back("b" + std::to_string(b));
  return {GridRaster(w, h, names, synth_transform(), kCrs, kNodata, std::move(bands)),
          GridRaster(w, h, {"dem"}, synth_transform(), kCrs, kNodata, std::move(dem))};
}

std::vector<SurveyPoint> generate_survey(const SynthSpec& spec, const SynthScene& scene,
                                         std::uint64_t seed) {
  spec.validate();
  const GridRaster& comp = scene.composite;
  if (comp.band_count() != 7 || scene.dem.band_count() != 1 || !comp.same_grid(scene.dem)) {
    throw DataError("survey needs a 7-band composite and a grid-aligned DEM");
  }
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < comp.pixel_count(); ++i) {
    bool ok = !comp.is_nodata(scene.dem.band(0)[i]);
    for (std::size_t b = 0; b < 7 && ok; ++b) ok = !comp.is_nodata(comp.band(b)[i]);
    if (ok) valid.push_back(i);
  }
  if (spec.n_points > valid.size()) {
    throw DataError("n_points (" + std::to_string(spec.n_points) + ") exceeds valid pixels (" +
                    std::to_string(valid.size()) + ")");
  }
  Rng rng(derive_seed(seed, "survey"));
  rng.shuffle(std::span<std::size_t>(valid));

  const double span = spec.elevation_max - spec.elevation_min;
  const BandRoles roles;
  std::vector<SurveyPoint> points;
  points.reserve(spec.n_points);
  for (std::size_t k = 0; k < spec.n_points; ++k) {
    const std::size_t i = valid[k];
    const std::size_t row = i / comp.width(), col = i % comp.width();
    const double red = comp.band(roles.red - 1)[i];
    const double nir = comp.band(roles.nir - 1)[i];
    const double swir1 = comp.band(roles.swir1 - 1)[i];
    const auto v_ndvi = ndvi(nir, red);
    const auto v_ndwi = ndwi(swir1, nir);
    if (!v_ndvi || !v_ndwi) throw DataError("index undefined at a survey pixel");
    const double u = (static_cast<double>(scene.dem.band(0)[i]) - spec.elevation_min) / span;
    const double noise = spec.noise_sd * rng.normal();
    const double yield = spec.base_yield + spec.elev_coeff * u + spec.elev_quad_coeff * u * u +
                         spec.ndvi_coeff * *v_ndvi + spec.ndwi_coeff * *v_ndwi + noise;
    char id[24];
    std::snprintf(id, sizeof id, "p%04zu", k + 1);
    points.push_back({id, comp.center_x(col), comp.center_y(row), std::max(0.0, yield), {}});
  }
  return points;
}

double oracle_recheck(const SynthScene& scene, std::span<const SurveyPoint> points,
                      const SynthSpec& spec) {
  const GridRaster& comp = scene.composite;
  const GeoTransform& t = comp.transform();
  double worst = 0.0;
  for (const auto& p : points) {
    const long col = static_cast<long>(std::floor((p.x - t.origin_x) / t.pixel_w));
    const long row = static_cast<long>(std::floor((p.y - t.origin_y) / t.pixel_h));
    const double red = comp.at(3, row, col);
    const double nir = comp.at(4, row, col);
    const double swir1 = comp.at(5, row, col);
    const double elev = scene.dem.at(0, row, col);
    const double u = (elev - spec.elevation_min) / (spec.elevation_max - spec.elevation_min);
    const double y = spec.base_yield + spec.elev_coeff * u + spec.elev_quad_coeff * u * u +
                     spec.ndvi_coeff * (nir - red) / (nir + red) +
                     spec.ndwi_coeff * (swir1 - nir) / (swir1 + nir);
    worst = std::max(worst, std::abs(std::max(0.0, y) - p.yield));
  }
  return worst;
}

}  // namespace olive
