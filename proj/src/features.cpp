#include "olive/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "olive/error.hpp"

namespace olive {

namespace fs = std::filesystem;

void SurveyPoint::validate() const {
  if (id.empty()) throw DataError("survey point has an empty id");
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw DataError("survey point '" + id + "' has non-finite coordinates");
  }
  if (!std::isfinite(yield) || yield < 0.0) {
    throw DataError("survey point '" + id + "' has a negative or non-finite yield");
  }
}

FeatureTable::FeatureTable(std::vector<std::string> ids, Matrix features,
                           std::vector<double> targets)
    : ids_(std::move(ids)), features_(std::move(features)), targets_(std::move(targets)) {
  if (features_.cols() != kFeatureCount) {
    throw DataError("feature table needs exactly 13 feature columns");
  }
  if (features_.rows() != ids_.size() || targets_.size() != ids_.size()) {
    throw DataError("feature table ids, rows and targets differ in length");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i].empty()) throw DataError("feature table row " + std::to_string(i) + " has an empty id");
    if (!seen.insert(ids_[i]).second) throw DataError("duplicate row id '" + ids_[i] + "'");
    for (double v : features_.row(i)) {
      if (!std::isfinite(v)) throw DataError("row '" + ids_[i] + "' has a non-finite feature");
    }
    if (!std::isfinite(targets_[i]) || targets_[i] < 0.0) {
      throw DataError("row '" + ids_[i] + "' has a negative or non-finite target");
    }
  }
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<double> targets;
  ids.reserve(rows.size());
  targets.reserve(rows.size());
  for (std::size_t r : rows) {
    ids.push_back(ids_.at(r));
    targets.push_back(targets_[r]);
  }
  return FeatureTable(std::move(ids), features_.select_rows(rows), std::move(targets));
}

SampleStrategy parse_strategy(std::string_view text) {
  if (text == "nearest") return SampleStrategy::nearest;
  if (text == "mean3x3") return SampleStrategy::mean3x3;
  throw ConfigError("unknown sampling strategy '" + std::string(text) + "'");
}

std::string_view to_string(SampleStrategy s) {
  return s == SampleStrategy::nearest ? "nearest" : "mean3x3";
}

GridRaster attach_dem(const GridRaster& stack12, const GridRaster& dem) {
  if (stack12.band_count() != 12) throw DataError("attach_dem expects a 12-band stack");
  if (dem.band_count() != 1) throw DataError("DEM must be single-band");
  if (!dem.same_grid(stack12)) throw DataError("DEM grid does not match the stack grid");
  std::vector<float> values(stack12.values().begin(), stack12.values().end());
  values.reserve(values.size() + dem.pixel_count());
  for (float v : dem.values()) {
    values.push_back(dem.is_nodata(v) ? stack12.nodata() : v);
  }
  std::vector<std::string> names = stack12.band_names();
  if (std::find(names.begin(), names.end(), "dem") != names.end()) {
    throw DataError("stack already has a band named 'dem'");
  }
  names.emplace_back("dem");
  return GridRaster(stack12.width(), stack12.height(), std::move(names),
                    stack12.transform(), stack12.crs(), stack12.nodata(), std::move(values));
}

namespace {

bool pixel_valid(const GridRaster& r, std::size_t row, std::size_t col) {
  for (std::size_t b = 0; b < r.band_count(); ++b) {
    if (r.is_nodata(r.at(b, row, col))) return false;
  }
  return true;
}

}  // namespace

SampleResult sample_at_points(const GridRaster& stack13, std::span<const SurveyPoint> points,
                              SampleStrategy strategy) {
  if (stack13.band_count() != kFeatureCount) {
    throw DataError("sampling expects a 13-band stack");
  }
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<double> targets;
  std::vector<DroppedPoint> dropped;

  for (const auto& p : points) {
    p.validate();
    const PixelIndex px = world_to_pixel(stack13, p.x, p.y);
    if (!stack13.contains(px)) {
      dropped.push_back({p.id, "out_of_bounds"});
      continue;
    }
    const auto row = static_cast<std::size_t>(px.row);
    const auto col = static_cast<std::size_t>(px.col);
    std::array<double, kFeatureCount> feature{};
    if (strategy == SampleStrategy::nearest) {
      if (!pixel_valid(stack13, row, col)) {
        dropped.push_back({p.id, "nodata"});
        continue;
      }
      for (std::size_t b = 0; b < kFeatureCount; ++b) feature[b] = stack13.at(b, row, col);
    } else {
      std::size_t valid = 0;
      for (std::int64_t dr = -1; dr <= 1; ++dr) {
        for (std::int64_t dc = -1; dc <= 1; ++dc) {
          const PixelIndex q{px.col + dc, px.row + dr};
          if (!stack13.contains(q)) continue;
          const auto qr = static_cast<std::size_t>(q.row);
          const auto qc = static_cast<std::size_t>(q.col);
          if (!pixel_valid(stack13, qr, qc)) continue;
          ++valid;
          for (std::size_t b = 0; b < kFeatureCount; ++b) feature[b] += stack13.at(b, qr, qc);
        }
      }
      if (valid < 5) {
        dropped.push_back({p.id, "insufficient_valid"});
        continue;
      }
      for (double& f : feature) f /= static_cast<double>(valid);
    }
    ids.push_back(p.id);
    values.insert(values.end(), feature.begin(), feature.end());
    targets.push_back(p.yield);
  }
  const std::size_t rows = ids.size();
  return {FeatureTable(std::move(ids), Matrix(rows, kFeatureCount, std::move(values)),
                       std::move(targets)),
          std::move(dropped)};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw DataError("line " + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
  }
  return v;
}

struct CsvFile {
  std::map<std::string, std::size_t> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvFile read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvFile csv;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty CSV");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!csv.columns.emplace(header[i], i).second) {
      throw DataError(path.string() + ": duplicate column '" + header[i] + "'");
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) +
                      " has the wrong number of cells");
    }
    csv.rows.push_back(std::move(cells));
    csv.line_numbers.push_back(line_no);
  }
  return csv;
}

std::size_t require_column(const CsvFile& csv, std::string_view name, const fs::path& path) {
  auto it = csv.columns.find(std::string(name));
  if (it == csv.columns.end()) {
    throw DataError(path.string() + ": missing column '" + std::string(name) + "'");
  }
  return it->second;
}

void reject_unknown(const CsvFile& csv, const std::set<std::string>& known,
                    const fs::path& path) {
  for (const auto& [name, _] : csv.columns) {
    if (!known.contains(name)) {
      throw DataError(path.string() + ": unexpected column '" + name + "'");
    }
  }
}

}  // namespace

std::vector<SurveyPoint> read_points_csv(const fs::path& path) {
  const CsvFile csv = read_csv(path);
  reject_unknown(csv, {"id", "x", "y", "yield_t_ha", "region"}, path);
  const std::size_t c_id = require_column(csv, "id", path);
  const std::size_t c_x = require_column(csv, "x", path);
  const std::size_t c_y = require_column(csv, "y", path);
  const std::size_t c_yield = require_column(csv, kTargetName, path);
  const auto region = csv.columns.find("region");

  std::vector<SurveyPoint> points;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& cells = csv.rows[i];
    const std::size_t line_no = csv.line_numbers[i];
    SurveyPoint p;
    p.id = cells[c_id];
    p.x = parse_number(cells[c_x], line_no);
    p.y = parse_number(cells[c_y], line_no);
    p.yield = parse_number(cells[c_yield], line_no);
    if (region != csv.columns.end() && !cells[region->second].empty()) {
      p.region = cells[region->second];
    }
    p.validate();
    if (!seen.insert(p.id).second) throw DataError("duplicate point id '" + p.id + "'");
    points.push_back(std::move(p));
  }
  return points;
}

void write_points_csv(std::span<const SurveyPoint> points, const fs::path& path) {
  const bool any_region = std::any_of(points.begin(), points.end(),
                                      [](const auto& p) { return p.region.has_value(); });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,x,y,yield_t_ha" << (any_region ? ",region" : "") << '\n';
  for (const auto& p : points) {
    out << p.id << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(p.yield);
    if (any_region) out << ',' << p.region.value_or("");
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_table_csv(const FeatureTable& table, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id";
  for (auto name : kFeatureNames) out << ',' << name;
  out << ',' << kTargetName << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids()[i];
    for (double v : table.features().row(i)) out << ',' << format_double(v);
    out << ',' << format_double(table.targets()[i]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

FeatureTable read_table_csv(const fs::path& path) {
  const CsvFile csv = read_csv(path);
  std::set<std::string> known{"id", std::string(kTargetName)};
  for (auto name : kFeatureNames) known.emplace(name);
  reject_unknown(csv, known, path);

  const std::size_t c_id = require_column(csv, "id", path);
  std::array<std::size_t, kFeatureCount> c_feature{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    c_feature[f] = require_column(csv, kFeatureNames[f], path);
  }
  const std::size_t c_target = require_column(csv, kTargetName, path);

  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<double> targets;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& cells = csv.rows[i];
    ids.push_back(cells[c_id]);
    for (std::size_t c : c_feature) values.push_back(parse_number(cells[c], csv.line_numbers[i]));
    targets.push_back(parse_number(cells[c_target], csv.line_numbers[i]));
  }
  const std::size_t rows = ids.size();
  return FeatureTable(std::move(ids), Matrix(rows, kFeatureCount, std::move(values)),
                      std::move(targets));
}

}  // namespace olive
