#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

#include "olive/raster.hpp"

namespace olive {

// Scalar index kernels. Each returns nullopt where the formula is undefined
// (zero denominator or non-finite input).
std::optional<double> ndvi(double nir, double red);
std::optional<double> gndvi(double nir, double green);
std::optional<double> savi(double nir, double red, double soil_l);
// (swir1 - nir) / (swir1 + nir).
std::optional<double> ndwi(double swir1, double nir);
std::optional<double> ci_green(double nir, double green);

inline constexpr std::array<std::string_view, 5> kIndexBandNames = {
    "ndvi", "gndvi", "savi", "ndwi", "ci_green"};

// 1-based band numbers within the 7-band composite.
struct BandRoles {
  std::size_t green = 3;
  std::size_t red = 4;
  std::size_t nir = 5;
  std::size_t swir1 = 6;
};

struct IndexParams {
  double savi_l = 0.5;
  BandRoles roles;

  void validate() const;
};

/// 12-band stack: the seven input bands followed by ndvi, gndvi, savi, ndwi,
/// ci_green. At a pixel where any input band is nodata or negative, all five
/// index bands are nodata; each index is also nodata where its kernel is
/// undefined.
GridRaster compute_index_stack(const GridRaster& composite, const IndexParams& params = {});

}  // namespace olive
