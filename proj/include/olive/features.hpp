#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "olive/matrix.hpp"
#include "olive/raster.hpp"

namespace olive {

inline constexpr std::size_t kFeatureCount = 13;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "b1", "b2", "b3", "b4", "b5", "b6", "b7",
    "ndvi", "gndvi", "savi", "ndwi", "ci_green", "dem"};
inline constexpr std::string_view kTargetName = "yield_t_ha";

struct SurveyPoint {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  double yield = 0.0;  // tons per hectare
  std::optional<std::string> region;

  // Throws DataError on empty id, non-finite coordinates or negative yield.
  void validate() const;
};

/// Tabular dataset: one row per farm, 13 features in fixed order plus target.
class FeatureTable {
 public:
  FeatureTable(std::vector<std::string> ids, Matrix features, std::vector<double> targets);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<double>& targets() const noexcept { return targets_; }

  FeatureTable subset(std::span<const std::size_t> rows) const;

  bool operator==(const FeatureTable&) const = default;

 private:
  std::vector<std::string> ids_;
  Matrix features_;
  std::vector<double> targets_;
};

enum class SampleStrategy { nearest, mean3x3 };

SampleStrategy parse_strategy(std::string_view text);
std::string_view to_string(SampleStrategy s);

struct DroppedPoint {
  std::string id;
  std::string reason;  // "out_of_bounds" | "nodata" | "insufficient_valid"
};

struct SampleResult {
  FeatureTable table;
  std::vector<DroppedPoint> dropped;
};

/// Appends a single-band DEM, grid-identical to the 12-band stack, as band
/// 13 named "dem". DEM nodata becomes the stack's nodata.
GridRaster attach_dem(const GridRaster& stack12, const GridRaster& dem);

/// Samples the 13-band stack at each point. `nearest` reads the pixel that
/// contains the point; `mean3x3` averages the fully valid pixels of the 3x3
/// window around it and needs at least 5 of them.
SampleResult sample_at_points(const GridRaster& stack13, std::span<const SurveyPoint> points,
                              SampleStrategy strategy = SampleStrategy::nearest);

// Header: id,x,y,yield_t_ha[,region].
std::vector<SurveyPoint> read_points_csv(const std::filesystem::path& path);
void write_points_csv(std::span<const SurveyPoint> points, const std::filesystem::path& path);

// Header: id,b1,...,b7,ndvi,gndvi,savi,ndwi,ci_green,dem,yield_t_ha.
void write_table_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_table_csv(const std::filesystem::path& path);

// Shortest text that keeps 17 significant digits ("%.17g").
std::string format_double(double v);

}  // namespace olive
