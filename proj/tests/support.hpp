#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "olive/random.hpp"
#include "olive/raster.hpp"

namespace testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("olive_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline olive::GeoTransform utm_transform(double ox = 500000.0, double oy = 4000000.0,
                                         double pixel = 30.0) {
  return {ox, pixel, oy, -pixel};
}

inline std::vector<std::string> band_names(std::size_t n, const std::string& prefix = "b") {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

// Uniform samples in [lo, hi) for every band.
inline olive::GridRaster random_raster(std::size_t w, std::size_t h, std::size_t bands,
                                       std::uint64_t seed, double lo = 0.0, double hi = 1.0,
                                       olive::GeoTransform t = utm_transform()) {
  olive::Rng rng(seed);
  std::vector<float> v(w * h * bands);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return olive::GridRaster(w, h, band_names(bands), t, "EPSG:32632", -9999.0f, std::move(v));
}

inline olive::GridRaster raster_of(std::size_t w, std::size_t h, std::vector<float> v,
                                   olive::GeoTransform t = utm_transform(),
                                   std::vector<std::string> names = {}) {
  const std::size_t bands = v.size() / (w * h);
  if (names.empty()) names = band_names(bands);
  return olive::GridRaster(w, h, std::move(names), t, "EPSG:32632", -9999.0f, std::move(v));
}

}  // namespace testing
