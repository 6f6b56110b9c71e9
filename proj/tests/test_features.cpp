#include <doctest.h>

#include <fstream>
#include <sstream>

#include "olive/error.hpp"
#include "olive/features.hpp"
#include "olive/indices.hpp"
#include "support.hpp"

using namespace olive;
using testing::TempDir;

namespace {

GridRaster stack13(std::size_t w, std::size_t h, std::uint64_t seed) {
  const GridRaster stack12 = compute_index_stack(testing::random_raster(w, h, 7, seed, 0.05, 0.6));
  Rng rng(seed + 100);
  std::vector<float> dem(w * h);
  for (auto& v : dem) v = static_cast<float>(rng.uniform(0, 300));
  return attach_dem(stack12, testing::raster_of(w, h, dem, testing::utm_transform(), {"dem"}));
}

FeatureTable random_table(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> ids;
  Matrix x(n, kFeatureCount);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("farm-" + std::to_string(i));
    for (std::size_t j = 0; j < kFeatureCount; ++j) x(i, j) = rng.normal() * 1e3 / 7.0;
    y[i] = rng.uniform(0, 9);
  }
  return FeatureTable(std::move(ids), std::move(x), std::move(y));
}

}  // namespace

TEST_CASE("feature column order") {
  CHECK(kFeatureNames[7] == "ndvi");
  CHECK(kFeatureNames[9] == "savi");
  CHECK(kFeatureNames[10] == "ndwi");
  CHECK(kFeatureNames[11] == "ci_green");
  CHECK(kFeatureNames[12] == "dem");
}

TEST_CASE("attach_dem appends band 13") {
  const GridRaster s12 = compute_index_stack(testing::random_raster(5, 4, 7, 2));
  std::vector<float> dem(20, 50.0f);
  dem[3] = -9999.0f;
  const GridRaster d = testing::raster_of(5, 4, dem, testing::utm_transform(), {"elevation"});
  const GridRaster s = attach_dem(s12, d);
  CHECK(s.band_count() == 13);
  CHECK(s.band_names().back() == "dem");
  CHECK(s.at(12, 1, 1) == 50.0f);
  CHECK(s.is_nodata(s.band(12)[3]));
  for (std::size_t b = 0; b < 12; ++b) CHECK(s.at(b, 2, 3) == s12.at(b, 2, 3));

  const GridRaster shifted = testing::raster_of(5, 4, dem, testing::utm_transform(500030), {"dem"});
  CHECK_THROWS_AS(attach_dem(s12, shifted), DataError);
  CHECK_THROWS_AS(attach_dem(s12, testing::random_raster(5, 4, 2, 1)), DataError);
  CHECK_THROWS_AS(attach_dem(testing::random_raster(5, 4, 7, 1), d), DataError);
}

TEST_CASE("nearest sampling at a pixel center is exact") {
  const GridRaster s = stack13(6, 5, 3);
  const SurveyPoint p{"a", s.center_x(4), s.center_y(2), 3.5, {}};
  const SampleResult r = sample_at_points(s, std::vector<SurveyPoint>{p});
  REQUIRE(r.table.size() == 1);
  CHECK(r.dropped.empty());
  for (std::size_t b = 0; b < 13; ++b) {
    CHECK(r.table.features()(0, b) == static_cast<double>(s.at(b, 2, 4)));
  }
  CHECK(r.table.targets()[0] == 3.5);
  CHECK(r.table.ids()[0] == "a");
}

TEST_CASE("out-of-bounds and nodata points are dropped with reasons") {
  GridRaster s = stack13(6, 5, 4);
  std::vector<float> v(s.values().begin(), s.values().end());
  v[12 * 30 + 7] = -9999.0f;  // dem nodata at (row 1, col 1)
  s = GridRaster(6, 5, s.band_names(), s.transform(), s.crs(), s.nodata(), v);
  const std::vector<SurveyPoint> pts = {
      {"in", s.center_x(0), s.center_y(0), 1.0, {}},
      {"out", 0.0, 0.0, 1.0, {}},
      {"hole", s.center_x(1), s.center_y(1), 1.0, {}},
  };
  const SampleResult r = sample_at_points(s, pts);
  CHECK(r.table.size() == 1);
  REQUIRE(r.dropped.size() == 2);
  CHECK(r.dropped[0].id == "out");
  CHECK(r.dropped[0].reason == "out_of_bounds");
  CHECK(r.dropped[1].id == "hole");
  CHECK(r.dropped[1].reason == "nodata");
  CHECK(r.table.size() + r.dropped.size() == pts.size());
}

TEST_CASE("mean3x3 of a uniform neighborhood returns that value") {
  std::vector<float> v(13 * 25);
  for (std::size_t b = 0; b < 13; ++b) {
    for (std::size_t i = 0; i < 25; ++i) v[b * 25 + i] = 0.125f * (b + 1);
  }
  const GridRaster s = testing::raster_of(5, 5, v, testing::utm_transform(),
                                          std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end()));
  const std::vector<SurveyPoint> pts = {{"c", s.center_x(2), s.center_y(2), 2.0, {}},
                                        {"corner", s.center_x(0), s.center_y(0), 2.0, {}}};
  const SampleResult r = sample_at_points(s, pts, SampleStrategy::mean3x3);
  REQUIRE(r.table.size() == 1);
  for (std::size_t b = 0; b < 13; ++b) CHECK(r.table.features()(0, b) == 0.125 * (b + 1));
  REQUIRE(r.dropped.size() == 1);
  CHECK(r.dropped[0].reason == "insufficient_valid");
}

TEST_CASE("strategy names") {
  CHECK(parse_strategy("nearest") == SampleStrategy::nearest);
  CHECK(parse_strategy("mean3x3") == SampleStrategy::mean3x3);
  CHECK(to_string(SampleStrategy::mean3x3) == "mean3x3");
  CHECK_THROWS_AS(parse_strategy("bilinear"), ConfigError);
}

TEST_CASE("feature table validation") {
  CHECK_THROWS_AS(FeatureTable({"a"}, Matrix(1, 12), {1.0}), DataError);
  CHECK_THROWS_AS(FeatureTable({"a", "a"}, Matrix(2, 13), {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(FeatureTable({"a"}, Matrix(1, 13), {-1.0}), DataError);
  CHECK_THROWS_AS(FeatureTable({"a"}, Matrix(1, 13, NAN), {1.0}), DataError);
  CHECK_THROWS_AS(FeatureTable({"a"}, Matrix(1, 13), {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(FeatureTable({""}, Matrix(1, 13), {1.0}), DataError);
}

TEST_CASE("table CSV round trip with 192 rows") {
  TempDir dir;
  const FeatureTable t = random_table(192, 8);
  write_table_csv(t, dir / "t.csv");
  std::ifstream in(dir / "t.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "id,b1,b2,b3,b4,b5,b6,b7,ndvi,gndvi,savi,ndwi,ci_green,dem,yield_t_ha");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 192);
  CHECK(read_table_csv(dir / "t.csv") == t);
}

TEST_CASE("table CSV schema errors") {
  TempDir dir;
  write_table_csv(random_table(3, 1), dir / "t.csv");
  std::string text = testing::slurp(dir / "t.csv");

  std::string missing = text;
  missing.replace(missing.find(",dem"), 4, ",elev");
  std::ofstream(dir / "missing.csv") << missing;
  CHECK_THROWS_AS(read_table_csv(dir / "missing.csv"), DataError);

  std::string dup = text;
  dup.replace(dup.find(",b7"), 3, ",b6");
  std::ofstream(dir / "dup.csv") << dup;
  CHECK_THROWS_AS(read_table_csv(dir / "dup.csv"), DataError);

  std::string word = text;
  const auto line2 = word.find('\n') + 1;
  const auto comma = word.find(',', line2);
  word.replace(comma + 1, word.find(',', comma + 1) - comma - 1, "abc");
  std::ofstream(dir / "word.csv") << word;
  CHECK_THROWS_AS(read_table_csv(dir / "word.csv"), DataError);

  CHECK_THROWS_AS(read_table_csv(dir / "none.csv"), IoError);
}

TEST_CASE("points CSV round trip and validation") {
  TempDir dir;
  const std::vector<SurveyPoint> pts = {{"p1", 500000.5, 3999000.25, 4.6, std::string("Sousse")},
                                        {"p2", 500100.0, 3998000.0, 0.0, std::string("inland")}};
  write_points_csv(pts, dir / "p.csv");
  const auto back = read_points_csv(dir / "p.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "p1");
  CHECK(back[0].x == 500000.5);
  CHECK(back[1].region.value() == "inland");

  std::ofstream(dir / "dup.csv") << "id,x,y,yield_t_ha\na,1,2,3\na,1,2,3\n";
  CHECK_THROWS_AS(read_points_csv(dir / "dup.csv"), DataError);
  std::ofstream(dir / "neg.csv") << "id,x,y,yield_t_ha\na,1,2,-3\n";
  CHECK_THROWS_AS(read_points_csv(dir / "neg.csv"), DataError);
  std::ofstream(dir / "short.csv") << "id,x,yield_t_ha\na,1,3\n";
  CHECK_THROWS_AS(read_points_csv(dir / "short.csv"), DataError);
}

TEST_CASE("format_double round-trips") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
    CHECK(std::stod(format_double(v)) == v);
  }
}
