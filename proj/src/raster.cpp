#include "olive/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "olive/error.hpp"

namespace olive {

namespace fs = std::filesystem;
using nlohmann::json;

void BBox::validate() const {
  if (!(std::isfinite(min_x) && std::isfinite(min_y) && std::isfinite(max_x) &&
        std::isfinite(max_y))) {
    throw DataError("bounding box has non-finite coordinates");
  }
  if (!(min_x < max_x) || !(min_y < max_y)) {
    throw DataError("bounding box requires min_x < max_x and min_y < max_y");
  }
}

GridRaster::GridRaster(std::size_t width, std::size_t height,
                       std::vector<std::string> band_names, GeoTransform transform,
                       std::string crs, float nodata, std::vector<float> values)
    : width_(width),
      height_(height),
      band_names_(std::move(band_names)),
      transform_(transform),
      crs_(std::move(crs)),
      nodata_(nodata),
      values_(std::move(values)) {
  if (width_ == 0 || height_ == 0) throw DataError("raster dimensions must be >= 1");
  if (band_names_.empty()) throw DataError("raster needs at least one band");
  std::set<std::string> unique(band_names_.begin(), band_names_.end());
  if (unique.size() != band_names_.size()) throw DataError("band names must be unique");
  if (!(std::isfinite(transform_.origin_x) && std::isfinite(transform_.origin_y) &&
        std::isfinite(transform_.pixel_w) && std::isfinite(transform_.pixel_h))) {
    throw DataError("raster transform has non-finite terms");
  }
  if (!(transform_.pixel_w > 0.0)) throw DataError("pixel width must be > 0");
  if (transform_.pixel_h == 0.0) throw DataError("pixel height must be non-zero");
  if (!std::isfinite(nodata_)) throw DataError("nodata sentinel must be finite");
  if (values_.size() != width_ * height_ * band_names_.size()) {
    throw DataError("raster sample count does not equal width * height * bands");
  }
  for (float v : values_) {
    if (!std::isfinite(v) && v != nodata_) {
      throw DataError("raster holds a non-finite sample that is not nodata");
    }
  }
}

GridRaster GridRaster::filled(std::size_t width, std::size_t height,
                              std::vector<std::string> band_names,
                              GeoTransform transform, std::string crs, float nodata) {
  std::vector<float> values(width * height * band_names.size(), nodata);
  return GridRaster(width, height, std::move(band_names), transform, std::move(crs),
                    nodata, std::move(values));
}

bool GridRaster::same_grid(const GridRaster& other) const noexcept {
  return width_ == other.width_ && height_ == other.height_ &&
         transform_ == other.transform_ && crs_ == other.crs_;
}

bool GridRaster::operator==(const GridRaster& other) const {
  if (!same_grid(other) || band_names_ != other.band_names_) return false;
  // Bitwise comparison so the round trip is checked exactly (incl. -0.0).
  return std::bit_cast<std::uint32_t>(nodata_) ==
             std::bit_cast<std::uint32_t>(other.nodata_) &&
         values_.size() == other.values_.size() &&
         std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(float)) == 0;
}

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffU) << 24) | ((v & 0xff00U) << 8) | ((v >> 8) & 0xff00U) | (v >> 24);
  }
  return v;
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("raster header missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("raster header field '") + key + "' has the wrong type");
  }
}

}  // namespace

GridRaster read_raster(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw IoError("cannot open raster header " + header_path.string());
  json header;
  try {
    in >> header;
  } catch (const json::exception& e) {
    throw DataError("malformed raster header " + header_path.string() + ": " + e.what());
  }
  if (!header.is_object()) throw DataError("raster header must be a JSON object");
  if (field<int>(header, "format_version") != 1) {
    throw DataError("unsupported raster format_version");
  }
  if (field<std::string>(header, "dtype") != "float32") {
    throw DataError("unsupported raster dtype (only float32)");
  }
  const auto width = field<std::int64_t>(header, "width");
  const auto height = field<std::int64_t>(header, "height");
  const auto band_count = field<std::int64_t>(header, "band_count");
  if (width < 1 || height < 1 || band_count < 1) {
    throw DataError("raster header dimensions must be >= 1");
  }
  auto band_names = field<std::vector<std::string>>(header, "band_names");
  if (band_names.size() != static_cast<std::size_t>(band_count)) {
    throw DataError("band_names length does not equal band_count");
  }
  const auto t = field<std::vector<double>>(header, "transform");
  if (t.size() != 6) throw DataError("transform must have six terms");
  for (double v : t) {
    if (!std::isfinite(v)) throw DataError("raster transform has non-finite terms");
  }
  if (t[2] != 0.0 || t[4] != 0.0) throw DataError("rotated transforms are not supported");
  const auto nodata = field<double>(header, "nodata");
  const auto crs = field<std::string>(header, "crs");
  const auto data_file = field<std::string>(header, "data_file");

  const fs::path data_path = header_path.parent_path() / data_file;
  std::ifstream data(data_path, std::ios::binary);
  if (!data) throw IoError("cannot open raster data " + data_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(data)),
                          std::istreambuf_iterator<char>());
  const std::size_t count = static_cast<std::size_t>(width) *
                            static_cast<std::size_t>(height) *
                            static_cast<std::size_t>(band_count);
  if (bytes.size() != count * sizeof(float)) {
    throw DataError("raster data size mismatch: expected " +
                    std::to_string(count * sizeof(float)) + " bytes, found " +
                    std::to_string(bytes.size()));
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t word;
    std::memcpy(&word, bytes.data() + i * 4, 4);
    values[i] = std::bit_cast<float>(to_little(word));
  }
  return GridRaster(static_cast<std::size_t>(width), static_cast<std::size_t>(height),
                    std::move(band_names), GeoTransform{t[0], t[1], t[3], t[5]}, crs,
                    static_cast<float>(nodata), std::move(values));
}

void write_raster(const GridRaster& raster, const fs::path& header_path) {
  fs::path data_path = header_path;
  data_path.replace_extension(".bin");
  const auto& t = raster.transform();
  json header = {
      {"format_version", 1},
      {"width", raster.width()},
      {"height", raster.height()},
      {"band_count", raster.band_count()},
      {"band_names", raster.band_names()},
      {"dtype", "float32"},
      {"nodata", static_cast<double>(raster.nodata())},
      {"transform", {t.origin_x, t.pixel_w, 0.0, t.origin_y, 0.0, t.pixel_h}},
      {"crs", raster.crs()},
      {"data_file", data_path.filename().string()},
  };

  std::ofstream data(data_path, std::ios::binary | std::ios::trunc);
  if (!data) throw IoError("cannot write raster data " + data_path.string());
  std::vector<char> bytes(raster.values().size() * sizeof(float));
  for (std::size_t i = 0; i < raster.values().size(); ++i) {
    const std::uint32_t word = to_little(std::bit_cast<std::uint32_t>(raster.values()[i]));
    std::memcpy(bytes.data() + i * 4, &word, 4);
  }
  data.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!data) throw IoError("failed writing " + data_path.string());

  std::ofstream out(header_path, std::ios::trunc);
  if (!out) throw IoError("cannot write raster header " + header_path.string());
  out << header.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + header_path.string());
}

PixelIndex world_to_pixel(const GridRaster& raster, double x, double y) noexcept {
  const auto& t = raster.transform();
  return {static_cast<std::int64_t>(std::floor((x - t.origin_x) / t.pixel_w)),
          static_cast<std::int64_t>(std::floor((y - t.origin_y) / t.pixel_h))};
}

GridRaster concat_bands(std::span<const GridRaster> rasters) {
  if (rasters.empty()) throw DataError("cannot stack an empty list of rasters");
  const GridRaster& first = rasters.front();
  std::vector<std::string> names;
  std::vector<float> values;
  values.reserve(first.pixel_count() * rasters.size());
  for (const auto& r : rasters) {
    if (!r.same_grid(first)) {
      throw DataError("rasters differ in grid geometry or CRS");
    }
    if (std::bit_cast<std::uint32_t>(r.nodata()) !=
        std::bit_cast<std::uint32_t>(first.nodata())) {
      throw DataError("rasters differ in nodata sentinel");
    }
    names.insert(names.end(), r.band_names().begin(), r.band_names().end());
    values.insert(values.end(), r.values().begin(), r.values().end());
  }
  return GridRaster(first.width(), first.height(), std::move(names), first.transform(),
                    first.crs(), first.nodata(), std::move(values));
}

GridRaster band_composite(std::span<const GridRaster> bands) {
  if (bands.empty()) throw DataError("band composite needs at least one band");
  for (const auto& b : bands) {
    if (b.band_count() != 1) throw DataError("band composite inputs must be single-band");
  }
  return concat_bands(bands);
}

GridRaster extract_band(const GridRaster& raster, std::size_t b) {
  if (b >= raster.band_count()) throw DataError("band index out of range");
  const auto src = raster.band(b);
  return GridRaster(raster.width(), raster.height(), {raster.band_names()[b]},
                    raster.transform(), raster.crs(), raster.nodata(),
                    std::vector<float>(src.begin(), src.end()));
}

namespace {

// Inclusive index range [lo, hi] of pixels along one axis whose centers fall
// within [a, b]; the center of pixel i sits at origin + (i + 0.5) * step.
std::pair<std::int64_t, std::int64_t> center_range(double origin, double step, double a,
                                                   double b, std::size_t n) {
  const double t1 = (a - origin) / step - 0.5;
  const double t2 = (b - origin) / step - 0.5;
  auto lo = static_cast<std::int64_t>(std::ceil(std::min(t1, t2)));
  auto hi = static_cast<std::int64_t>(std::floor(std::max(t1, t2)));
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(n) - 1);
  return {lo, hi};
}

}  // namespace

GridRaster clip(const GridRaster& raster, const BBox& box) {
  box.validate();
  const auto& t = raster.transform();
  const auto [c0, c1] = center_range(t.origin_x, t.pixel_w, box.min_x, box.max_x, raster.width());
  const auto [r0, r1] = center_range(t.origin_y, t.pixel_h, box.min_y, box.max_y, raster.height());
  if (c0 > c1 || r0 > r1) throw DataError("clip box does not intersect the raster");

  const auto w = static_cast<std::size_t>(c1 - c0 + 1);
  const auto h = static_cast<std::size_t>(r1 - r0 + 1);
  std::vector<float> values;
  values.reserve(w * h * raster.band_count());
  for (std::size_t b = 0; b < raster.band_count(); ++b) {
    for (auto r = r0; r <= r1; ++r) {
      for (auto c = c0; c <= c1; ++c) {
        values.push_back(raster.at(b, static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
      }
    }
  }
  const GeoTransform out{t.origin_x + static_cast<double>(c0) * t.pixel_w, t.pixel_w,
                         t.origin_y + static_cast<double>(r0) * t.pixel_h, t.pixel_h};
  return GridRaster(w, h, raster.band_names(), out, raster.crs(), raster.nodata(),
                    std::move(values));
}

}  // namespace olive
