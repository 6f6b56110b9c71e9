#pragma once

#include <cstddef>
#include <span>

#include "olive/raster.hpp"

namespace olive {

// Landsat Collection-2 surface-reflectance scaling. Not applied by any
// pipeline step unless requested.
inline constexpr double kCollection2Gain = 2.75e-5;
inline constexpr double kCollection2Offset = -0.2;

inline constexpr std::size_t kDefaultHistogramBins = 256;

/// gain * v + offset for every valid sample, optionally clamped to [0, 1].
GridRaster rescale_linear(const GridRaster& raster, double gain, double offset,
                          bool clamp01);

/// Per-band histogram matching of `source` onto `reference`.
///
/// Each band's valid samples are binned into `bins` equal-width bins over
/// [band min, band max]. The CDF is the cumulative bin mass at bin edges,
/// linear inside a bin, reaching 1 at the band maximum. A valid source value v maps
/// to the reference value at quantile F_src(v), found by linear interpolation
/// between reference bin edges. A constant band has F = 1 everywhere. Nodata
/// and source geometry are preserved.
GridRaster histogram_match(const GridRaster& source, const GridRaster& reference,
                           std::size_t bins = kDefaultHistogramBins);

/// Union-extent mosaic on the reference grid. Valid reference pixels win
/// overlaps; among `others`, earlier scenes win over later ones. With
/// `match_first`, each other scene is histogram-matched to the reference
/// before placement. Uncovered cells hold the reference nodata.
GridRaster mosaic(const GridRaster& reference, std::span<const GridRaster> others,
                  bool match_first, std::size_t bins = kDefaultHistogramBins);

}  // namespace olive
