#include "olive/indices.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "olive/error.hpp"

namespace olive {

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0 || !std::isfinite(num) || !std::isfinite(den)) return std::nullopt;
  const double v = num / den;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::optional<double> ndvi(double nir, double red) { return ratio(nir - red, nir + red); }

std::optional<double> gndvi(double nir, double green) {
  return ratio(nir - green, nir + green);
}

std::optional<double> savi(double nir, double red, double soil_l) {
  const auto r = ratio(nir - red, nir + red + soil_l);
  if (!r) return std::nullopt;
  return (1.0 + soil_l) * *r;
}

std::optional<double> ndwi(double swir1, double nir) {
  return ratio(swir1 - nir, swir1 + nir);
}

std::optional<double> ci_green(double nir, double green) {
  const auto r = ratio(nir, green);
  if (!r) return std::nullopt;
  return *r - 1.0;
}

void IndexParams::validate() const {
  if (!(savi_l >= 0.0) || !std::isfinite(savi_l)) throw ConfigError("savi L must be >= 0");
  for (std::size_t role : {roles.green, roles.red, roles.nir, roles.swir1}) {
    if (role < 1 || role > 7) throw ConfigError("band roles must be within 1..7");
  }
}

GridRaster compute_index_stack(const GridRaster& composite, const IndexParams& params) {
  params.validate();
  if (composite.band_count() != 7) {
    throw DataError("index stack needs a 7-band composite, got " +
                    std::to_string(composite.band_count()) + " bands");
  }
  const std::size_t n = composite.pixel_count();
  const float nodata = composite.nodata();
  std::vector<float> values(composite.values().begin(), composite.values().end());
  values.resize(12 * n, nodata);

  const auto green = composite.band(params.roles.green - 1);
  const auto red = composite.band(params.roles.red - 1);
  const auto nir = composite.band(params.roles.nir - 1);
  const auto swir1 = composite.band(params.roles.swir1 - 1);

  auto store = [&](std::size_t band, std::size_t i, std::optional<double> v) {
    if (!v) return;
    const auto f = static_cast<float>(*v);
    // Values that overflow float32 or collide with the sentinel stay nodata.
    if (std::isfinite(f) && f != nodata) values[band * n + i] = f;
  };

  for (std::size_t i = 0; i < n; ++i) {
    bool valid = true;
    for (std::size_t b = 0; b < 7; ++b) {
      const float v = composite.band(b)[i];
      if (composite.is_nodata(v) || v < 0.0f) {
        valid = false;
        break;
      }
    }
    if (!valid) continue;
    const double g = green[i], r = red[i], ni = nir[i], s = swir1[i];
    store(7, i, ndvi(ni, r));
    store(8, i, gndvi(ni, g));
    store(9, i, savi(ni, r, params.savi_l));
    store(10, i, ndwi(s, ni));
    store(11, i, ci_green(ni, g));
  }

  std::vector<std::string> names = composite.band_names();
  for (auto name : kIndexBandNames) {
    std::string label(name);
    if (std::find(names.begin(), names.end(), label) != names.end()) {
      throw DataError("composite already has a band named '" + label + "'");
    }
    names.push_back(std::move(label));
  }
  return GridRaster(composite.width(), composite.height(), std::move(names),
                    composite.transform(), composite.crs(), nodata, std::move(values));
}

}  // namespace olive
