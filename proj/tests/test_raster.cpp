#include <doctest.h>

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "olive/error.hpp"
#include "olive/raster.hpp"
#include "support.hpp"

using namespace olive;
using testing::raster_of;
using testing::TempDir;

TEST_CASE("round trip of a 2x2 single-band raster") {
  TempDir dir;
  const GridRaster r = raster_of(2, 2, {1, 2, 3, 4});
  write_raster(r, dir / "r.json");
  const GridRaster back = read_raster(dir / "r.json");
  CHECK(back == r);
  CHECK(back.at(0, 0, 0) == 1.0f);
  CHECK(back.at(0, 0, 1) == 2.0f);
  CHECK(back.at(0, 1, 0) == 3.0f);
  CHECK(back.at(0, 1, 1) == 4.0f);
}

TEST_CASE("round trip is bit-exact and keeps nodata") {
  TempDir dir;
  GridRaster r = testing::random_raster(17, 9, 3, 5);
  std::vector<float> v(r.values().begin(), r.values().end());
  v[4] = -9999.0f;
  v[100] = -9999.0f;
  v[7] = 1e-30f;
  r = raster_of(17, 9, v, {123.25, 10.0, 456.5, -10.0}, {"a", "b", "c"});
  write_raster(r, dir / "x.json");
  const GridRaster back = read_raster(dir / "x.json");
  REQUIRE(back.values().size() == r.values().size());
  CHECK(std::memcmp(back.values().data(), r.values().data(), v.size() * sizeof(float)) == 0);
  CHECK(back.is_nodata(back.values()[4]));
  CHECK(back.band_names() == r.band_names());
  CHECK(back.transform() == r.transform());
  CHECK(back.crs() == "EPSG:32632");
}

TEST_CASE("header band count larger than the data is a size error") {
  TempDir dir;
  write_raster(testing::random_raster(4, 4, 3, 1), dir / "r.json");
  nlohmann::json h = nlohmann::json::parse(testing::slurp(dir / "r.json"));
  h["band_count"] = 4;
  h["band_names"].push_back("b4");
  std::ofstream(dir / "r.json") << h.dump();
  CHECK_THROWS_AS(read_raster(dir / "r.json"), DataError);
}

TEST_CASE("malformed headers and missing files") {
  TempDir dir;
  CHECK_THROWS_AS(read_raster(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(read_raster(dir / "bad.json"), DataError);

  write_raster(testing::random_raster(3, 3, 1, 1), dir / "r.json");
  nlohmann::json h = nlohmann::json::parse(testing::slurp(dir / "r.json"));
  auto rotated = h;
  rotated["transform"][2] = 0.5;
  std::ofstream(dir / "rot.json") << rotated.dump();
  CHECK_THROWS_AS(read_raster(dir / "rot.json"), DataError);
  auto nonfinite = h;
  nonfinite["transform"][0] = "nan";
  std::ofstream(dir / "nf.json") << nonfinite.dump();
  CHECK_THROWS_AS(read_raster(dir / "nf.json"), DataError);
  std::filesystem::remove(dir / "r.bin");
  CHECK_THROWS_AS(read_raster(dir / "r.json"), IoError);
}

TEST_CASE("writing into an unwritable location is an I/O error") {
  TempDir dir;
  std::ofstream(dir / "file") << "x";
  CHECK_THROWS_AS(write_raster(raster_of(1, 1, {1}), dir / "file" / "r.json"), IoError);
}

TEST_CASE("constructor enforces invariants") {
  const auto t = testing::utm_transform();
  CHECK_THROWS_AS(GridRaster(2, 2, {"a"}, t, "EPSG:1", -1.0f, {1, 2, 3}), DataError);
  CHECK_THROWS_AS(GridRaster(0, 2, {"a"}, t, "EPSG:1", -1.0f, {}), DataError);
  CHECK_THROWS_AS(GridRaster(1, 1, {"a", "a"}, t, "EPSG:1", -1.0f, {1, 2}), DataError);
  CHECK_THROWS_AS(GridRaster(1, 1, {"a"}, {0, 0, 0, -1}, "EPSG:1", -1.0f, {1}), DataError);
  CHECK_THROWS_AS(GridRaster(1, 1, {"a"}, {0, 1, 0, 0}, "EPSG:1", -1.0f, {1}), DataError);
  CHECK_THROWS_AS(GridRaster(1, 1, {"a"}, t, "EPSG:1", -1.0f, {NAN}), DataError);
  CHECK_THROWS_AS(GridRaster(1, 1, {"a"}, t, "EPSG:1", NAN, {1}), DataError);
  CHECK_NOTHROW(GridRaster(1, 1, {"a"}, t, "EPSG:1", -1.0f, {-1.0f}));
}

TEST_CASE("world_to_pixel affine arithmetic") {
  const GridRaster r = testing::random_raster(4, 4, 1, 1);
  auto p = world_to_pixel(r, 500015, 3999985);
  CHECK(p.col == 0);
  CHECK(p.row == 0);
  p = world_to_pixel(r, 500000, 4000000);
  CHECK(p.col == 0);
  CHECK(p.row == 0);
  p = world_to_pixel(r, 500060, 3999940);
  CHECK(p.col == 2);
  CHECK(p.row == 2);
  p = world_to_pixel(r, 499999, 4000001);
  CHECK(p.col == -1);
  CHECK(p.row == -1);
  CHECK_FALSE(r.contains(p));
}

TEST_CASE("pixel centers map back to their pixel") {
  const GridRaster r = testing::random_raster(11, 7, 1, 1, 0, 1, {1000.0, 15.0, 2000.0, -20.0});
  for (std::size_t row = 0; row < r.height(); ++row) {
    for (std::size_t col = 0; col < r.width(); ++col) {
      const auto p = world_to_pixel(r, r.center_x(col), r.center_y(row));
      CHECK(p.col == static_cast<long>(col));
      CHECK(p.row == static_cast<long>(row));
    }
  }
}

TEST_CASE("band composite of seven bands") {
  std::vector<GridRaster> bands;
  for (int b = 1; b <= 7; ++b) {
    bands.push_back(testing::raster_of(3, 2, std::vector<float>(6, float(b)),
                                       testing::utm_transform(), {"b" + std::to_string(b)}));
  }
  const GridRaster c = band_composite(bands);
  CHECK(c.band_count() == 7);
  CHECK(c.band_names() == testing::band_names(7));
  for (std::size_t b = 0; b < 7; ++b) {
    CHECK(extract_band(c, b) == bands[b]);
    CHECK(c.at(b, 1, 2) == float(b + 1));
  }
}

TEST_CASE("band composite identity and errors") {
  const GridRaster one = testing::random_raster(5, 5, 1, 3);
  CHECK(band_composite(std::span<const GridRaster>(&one, 1)) == one);
  std::vector<GridRaster> mismatch = {one, testing::random_raster(5, 5, 1, 4, 0, 1,
                                                                  testing::utm_transform(500030))};
  CHECK_THROWS_AS(band_composite(mismatch), DataError);
  CHECK_THROWS_AS(band_composite(std::span<const GridRaster>()), DataError);
  std::vector<GridRaster> multi = {testing::random_raster(5, 5, 2, 3)};
  CHECK_THROWS_AS(band_composite(multi), DataError);
}

TEST_CASE("clip") {
  const GridRaster r = testing::random_raster(6, 5, 2, 8);
  const BBox full{500000, 4000000 - 150, 500000 + 180, 4000000};
  CHECK(clip(r, full) == r);

  const BBox one{500040, 3999950, 500050, 3999960};  // around the center of (1, 1)
  const GridRaster c = clip(r, one);
  CHECK(c.width() == 1);
  CHECK(c.height() == 1);
  CHECK(c.at(0, 0, 0) == r.at(0, 1, 1));
  CHECK(c.at(1, 0, 0) == r.at(1, 1, 1));
  CHECK(c.transform().origin_x == 500030);
  CHECK(c.transform().origin_y == 3999970);

  const BBox outside{0, 0, 10, 10};
  CHECK_THROWS_AS(clip(r, outside), DataError);
  CHECK_THROWS_AS(clip(r, BBox{1, 0, 0, 1}), DataError);

  const BBox part{500031, 3999881, 500140, 3999989};
  const GridRaster once = clip(r, part);
  CHECK(clip(once, part) == once);
  CHECK(once.width() == 4);
  CHECK(once.height() == 4);
}
