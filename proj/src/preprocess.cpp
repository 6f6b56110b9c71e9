#include "olive/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "olive/error.hpp"

namespace olive {

GridRaster rescale_linear(const GridRaster& raster, double gain, double offset,
                          bool clamp01) {
  if (!std::isfinite(gain) || !std::isfinite(offset)) {
    throw DataError("rescale gain and offset must be finite");
  }
  std::vector<float> out(raster.values().begin(), raster.values().end());
  for (float& v : out) {
    if (raster.is_nodata(v)) continue;
    double scaled = gain * static_cast<double>(v) + offset;
    if (clamp01) scaled = std::clamp(scaled, 0.0, 1.0);
    v = static_cast<float>(scaled);
    if (!std::isfinite(v)) throw DataError("rescaled sample overflows float32");
  }
  return GridRaster(raster.width(), raster.height(), raster.band_names(),
                    raster.transform(), raster.crs(), raster.nodata(), std::move(out));
}

namespace {

// Piecewise-linear empirical CDF of one band on equal-width bins.
class BinnedCdf {
 public:
  BinnedCdf(std::span<const float> samples, float nodata, std::size_t bins)
      : counts_(bins, 0) {
    bool any = false;
    for (float v : samples) {
      if (v == nodata) continue;
      if (!any) {
        lo_ = hi_ = v;
        any = true;
      }
      lo_ = std::min<double>(lo_, v);
      hi_ = std::max<double>(hi_, v);
    }
    if (!any) throw DataError("histogram matching: band has no valid pixels");
    width_ = (hi_ - lo_) / static_cast<double>(bins);
    for (float v : samples) {
      if (v == nodata) continue;
      ++counts_[bin_of(v)];
      ++total_;
    }
    cumulative_.assign(bins + 1, 0.0);
    for (std::size_t b = 0; b < bins; ++b) {
      cumulative_[b + 1] = cumulative_[b] + static_cast<double>(counts_[b]);
    }
    for (double& c : cumulative_) c /= static_cast<double>(total_);
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double bin_width() const { return width_; }

  // F(v) in [0, 1].
  double cdf(double v) const {
    if (width_ == 0.0) return 1.0;
    const std::size_t b = bin_of(v);
    const double edge = lo_ + static_cast<double>(b) * width_;
    const double frac = std::clamp((v - edge) / width_, 0.0, 1.0);
    return cumulative_[b] + frac * (cumulative_[b + 1] - cumulative_[b]);
  }

  // Smallest x with F(x) >= q, linear between bin edges.
  double quantile(double q) const {
    if (width_ == 0.0) return lo_;
    // First bin whose upper cumulative reaches q.
    auto it = std::lower_bound(cumulative_.begin() + 1, cumulative_.end(), q);
    if (it == cumulative_.end()) return hi_;
    const auto b = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    const double mass = cumulative_[b + 1] - cumulative_[b];
    const double frac = mass > 0.0 ? (q - cumulative_[b]) / mass : 0.0;
    const double edge = lo_ + static_cast<double>(b) * width_;
    return std::clamp(edge + frac * width_, lo_, hi_);
  }

 private:
  std::size_t bin_of(double v) const {
    if (width_ == 0.0) return 0;
    const double t = std::floor((v - lo_) / width_);
    if (t <= 0.0) return 0;
    return std::min(counts_.size() - 1, static_cast<std::size_t>(t));
  }

  double lo_ = 0.0;
  double hi_ = 0.0;
  double width_ = 0.0;
  std::size_t total_ = 0;
  std::vector<std::size_t> counts_;
  std::vector<double> cumulative_;
};

}  // namespace

GridRaster histogram_match(const GridRaster& source, const GridRaster& reference,
                           std::size_t bins) {
  if (bins < 2) throw DataError("histogram matching needs at least 2 bins");
  if (source.band_count() != reference.band_count()) {
    throw DataError("histogram matching: band counts differ");
  }
  std::vector<float> out(source.values().begin(), source.values().end());
  for (std::size_t b = 0; b < source.band_count(); ++b) {
    const BinnedCdf src(source.band(b), source.nodata(), bins);
    const BinnedCdf ref(reference.band(b), reference.nodata(), bins);
    const std::size_t base = b * source.pixel_count();
    for (std::size_t i = 0; i < source.pixel_count(); ++i) {
      float& v = out[base + i];
      if (source.is_nodata(v)) continue;
      v = static_cast<float>(ref.quantile(src.cdf(v)));
    }
  }
  return GridRaster(source.width(), source.height(), source.band_names(),
                    source.transform(), source.crs(), source.nodata(), std::move(out));
}

namespace {

std::int64_t aligned_offset(double origin, double ref_origin, double step) {
  const double cells = (origin - ref_origin) / step;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-6) {
    throw DataError("mosaic inputs are not aligned to a common pixel grid");
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

GridRaster mosaic(const GridRaster& reference, std::span<const GridRaster> others,
                  bool match_first, std::size_t bins) {
  const auto& rt = reference.transform();
  struct Placement {
    const GridRaster* raster;
    std::int64_t col0, row0;
  };
  std::vector<GridRaster> matched;
  matched.reserve(others.size());
  for (const auto& o : others) {
    if (o.crs() != reference.crs()) throw DataError("mosaic inputs differ in CRS");
    if (o.transform().pixel_w != rt.pixel_w || o.transform().pixel_h != rt.pixel_h) {
      throw DataError("mosaic inputs differ in pixel size");
    }
    if (o.band_count() != reference.band_count()) {
      throw DataError("mosaic inputs differ in band count");
    }
    matched.push_back(match_first ? histogram_match(o, reference, bins) : o);
  }

  // Lowest priority first; the reference is placed last.
  std::vector<Placement> placements;
  for (auto it = matched.rbegin(); it != matched.rend(); ++it) {
    placements.push_back({&*it, aligned_offset(it->transform().origin_x, rt.origin_x, rt.pixel_w),
                          aligned_offset(it->transform().origin_y, rt.origin_y, rt.pixel_h)});
  }
  placements.push_back({&reference, 0, 0});

  std::int64_t c_min = 0, r_min = 0;
  auto c_max = static_cast<std::int64_t>(reference.width());
  auto r_max = static_cast<std::int64_t>(reference.height());
  for (const auto& p : placements) {
    c_min = std::min(c_min, p.col0);
    r_min = std::min(r_min, p.row0);
    c_max = std::max(c_max, p.col0 + static_cast<std::int64_t>(p.raster->width()));
    r_max = std::max(r_max, p.row0 + static_cast<std::int64_t>(p.raster->height()));
  }
  const auto width = static_cast<std::size_t>(c_max - c_min);
  const auto height = static_cast<std::size_t>(r_max - r_min);
  const std::size_t plane = width * height;
  std::vector<float> values(plane * reference.band_count(), reference.nodata());

  for (const auto& p : placements) {
    const GridRaster& src = *p.raster;
    const auto dc = static_cast<std::size_t>(p.col0 - c_min);
    const auto dr = static_cast<std::size_t>(p.row0 - r_min);
    for (std::size_t b = 0; b < src.band_count(); ++b) {
      for (std::size_t r = 0; r < src.height(); ++r) {
        for (std::size_t c = 0; c < src.width(); ++c) {
          const float v = src.at(b, r, c);
          if (src.is_nodata(v)) continue;
          values[b * plane + (r + dr) * width + (c + dc)] = v;
        }
      }
    }
  }

  const GeoTransform out{rt.origin_x + static_cast<double>(c_min) * rt.pixel_w, rt.pixel_w,
                         rt.origin_y + static_cast<double>(r_min) * rt.pixel_h, rt.pixel_h};
  return GridRaster(width, height, reference.band_names(), out, reference.crs(),
                    reference.nodata(), std::move(values));
}

}  // namespace olive
