#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace olive {

/// North-up affine geotransform. The canonical six-term form is
/// [origin_x, pixel_w, 0, origin_y, 0, pixel_h]; rotation terms are always 0.
struct GeoTransform {
  double origin_x = 0.0;
  double pixel_w = 1.0;
  double origin_y = 0.0;
  double pixel_h = -1.0;

  bool operator==(const GeoTransform&) const = default;
};

struct BBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  // Throws DataError unless min < max on both axes.
  void validate() const;
};

struct PixelIndex {
  std::int64_t col = 0;
  std::int64_t row = 0;

  bool operator==(const PixelIndex&) const = default;
};

/// Georeferenced multiband float32 grid with a nodata sentinel.
///
/// Samples are band-sequential and row-major within a band, top row first.
/// The constructor enforces every invariant: positive dimensions, unique band
/// names (one per band), pixel_w > 0, pixel_h != 0, a finite nodata value and
/// every sample either finite or equal to nodata. Instances are immutable.
class GridRaster {
 public:
  GridRaster(std::size_t width, std::size_t height,
             std::vector<std::string> band_names, GeoTransform transform,
             std::string crs, float nodata, std::vector<float> values);

  // Raster of the given shape filled with nodata.
  static GridRaster filled(std::size_t width, std::size_t height,
                           std::vector<std::string> band_names,
                           GeoTransform transform, std::string crs, float nodata);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t band_count() const noexcept { return band_names_.size(); }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  const std::vector<std::string>& band_names() const noexcept { return band_names_; }
  const GeoTransform& transform() const noexcept { return transform_; }
  const std::string& crs() const noexcept { return crs_; }
  float nodata() const noexcept { return nodata_; }
  std::span<const float> values() const noexcept { return values_; }

  std::span<const float> band(std::size_t b) const {
    return std::span<const float>(values_).subspan(b * pixel_count(), pixel_count());
  }
  float at(std::size_t b, std::size_t row, std::size_t col) const {
    return values_[b * pixel_count() + row * width_ + col];
  }
  bool is_nodata(float v) const noexcept { return v == nodata_; }
  bool contains(PixelIndex p) const noexcept {
    return p.col >= 0 && p.row >= 0 && static_cast<std::size_t>(p.col) < width_ &&
           static_cast<std::size_t>(p.row) < height_;
  }

  // World coordinates of the center of pixel (col, row).
  double center_x(std::int64_t col) const noexcept {
    return transform_.origin_x + (static_cast<double>(col) + 0.5) * transform_.pixel_w;
  }
  double center_y(std::int64_t row) const noexcept {
    return transform_.origin_y + (static_cast<double>(row) + 0.5) * transform_.pixel_h;
  }

  // Same width, height, transform and CRS.
  bool same_grid(const GridRaster& other) const noexcept;

  bool operator==(const GridRaster& other) const;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::string> band_names_;
  GeoTransform transform_;
  std::string crs_;
  float nodata_;
  std::vector<float> values_;
};

/// Reads `<name>.json` plus the raw little-endian float32 data file it names
/// (resolved relative to the header's directory).
GridRaster read_raster(const std::filesystem::path& header_path);

/// Writes the header to `header_path` and the samples to a sibling `.bin`.
void write_raster(const GridRaster& raster, const std::filesystem::path& header_path);

/// Pixel owning world point (x, y). Cells are half-open
/// [x0, x0 + pw) x (y0 + ph, y0]; the result may be out of bounds.
PixelIndex world_to_pixel(const GridRaster& raster, double x, double y) noexcept;

/// Stacks single-band rasters sharing one grid, CRS and nodata into a
/// multiband raster, keeping input order and band names.
GridRaster band_composite(std::span<const GridRaster> bands);

/// Single-band raster holding band `b`.
GridRaster extract_band(const GridRaster& raster, std::size_t b);

/// Concatenates the bands of grid-identical rasters (any band counts).
GridRaster concat_bands(std::span<const GridRaster> rasters);

/// Sub-raster of the pixels whose centers lie inside `box` (edges inclusive).
GridRaster clip(const GridRaster& raster, const BBox& box);

}  // namespace olive
