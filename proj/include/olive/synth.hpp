#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "olive/features.hpp"
#include "olive/raster.hpp"

namespace olive {

/// Synthetic scene and survey parameters. Yield law:
///   max(0, base + elev_coeff*u + elev_quad_coeff*u^2 + ndvi_coeff*NDVI
///          + ndwi_coeff*NDWI + N(0, noise_sd))
/// with u = (elevation - elevation_min) / (elevation_max - elevation_min).
struct SynthSpec {
  std::size_t width = 128;
  std::size_t height = 128;
  std::size_t n_points = 200;
  double elevation_min = 0.0;
  double elevation_max = 300.0;
  double base_yield = 4.6;
  double elev_coeff = -6.0;
  double elev_quad_coeff = 0.0;
  double ndvi_coeff = 2.0;
  double ndwi_coeff = -1.0;
  double noise_sd = 0.8;
  std::uint64_t seed = 42;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static SynthSpec from_json(const nlohmann::json& j);
};

struct SynthScene {
  GridRaster composite;  // b1..b7 reflectance in [0, 1]
  GridRaster dem;        // single band "dem", meters
};

/// Seven value-noise reflectance bands and a DEM rising west to east along a
/// logistic ramp, with noise, stretched to span the elevation range exactly.
/// Grid: origin (500000, 4000000), 30 m pixels, EPSG:32632, nodata -9999.
SynthScene generate_scene(const SynthSpec& spec, std::uint64_t seed);
inline SynthScene generate_scene(const SynthSpec& spec) { return generate_scene(spec, spec.seed); }

/// n_points distinct pixel centers with yields drawn from the law. Ids are
/// "p0001", "p0002", ...
std::vector<SurveyPoint> generate_survey(const SynthSpec& spec, const SynthScene& scene,
                                         std::uint64_t seed);
inline std::vector<SurveyPoint> generate_survey(const SynthSpec& spec, const SynthScene& scene) {
  return generate_survey(spec, scene, spec.seed);
}

/// Recomputes each point's noiseless yield straight from the raw pixels and
/// returns the largest absolute difference from the recorded yield.
double oracle_recheck(const SynthScene& scene, std::span<const SurveyPoint> points,
                      const SynthSpec& spec);

}  // namespace olive
