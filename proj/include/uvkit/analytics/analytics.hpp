#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvkit/geomesh/clip.hpp"

namespace uvkit::analytics {

using geomesh::Point;
using geomesh::PolygonSet;
using geomesh::RegionPolygon;

struct CityRecord {
  std::string city_id;
  PolygonSet gub;  // built-up extent, one or more parts
  PolygonSet uv_regions;
  std::string region_key;

  // Throws ValidationError for an empty GUB or a UV region outside it.
  void validate() const;
};

// Area of (union of UVs) inside the GUB over the GUB area.
double uv_proportion(const CityRecord& city);
// Area of the UV union clipped to the GUB, in m^2.
double uv_area_in_gub(const CityRecord& city);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<double> residuals;
  std::vector<std::size_t> residual_rank;  // indices by |residual|, largest first
};

// Ordinary least squares of y on x. Throws ValidationError for fewer than 3
// points, mismatched lengths or zero variance in x.
Regression ols(const std::vector<double>& x, const std::vector<double>& y);
// UV area (km^2, clipped to the GUB) against GUB area (km^2).
Regression built_up_regression(const std::vector<CityRecord>& cities);

enum class Pattern { Peripheral, Mosaic };
std::string to_string(Pattern p);

struct UvDistance {
  std::size_t region = 0;
  Point anchor;  // centroid, or the pole when the centroid leaves the GUB
  bool anchor_is_centroid = true;
  double distance_m = 0.0;
  double normalized = 0.0;  // min(1, distance / pia_distance)
  double area_m2 = 0.0;
};

struct PeripheryResult {
  std::vector<UvDistance> per_uv;
  double city_index = 0.0;
  std::optional<Pattern> pattern;  // set by classify_pattern
  double pia_distance_m = 0.0;     // largest pole clearance over the GUB parts
};

// Area-weighted mean of normalized anchor-to-GUB-boundary distances. Throws
// ValidationError without UVs or when the GUB clearance is within `precision`.
PeripheryResult periphery_index(const CityRecord& city, double precision = 1.0);

// Peripheral when the index is at or below the mean over the input set.
std::map<std::string, Pattern> classify_pattern(const std::map<std::string, double>& indices);

struct Building {
  RegionPolygon footprint;
  double height_m = 0.0;
};

enum class Assignment {
  Centroid,      // footprint centroid inside a UV region
  MajorityArea,  // more than half the footprint inside the UV union
};

struct ZoneStats {
  bool present = false;  // false when no building was assigned to the zone
  std::size_t count = 0;
  double height_sum_m = 0.0;
  double footprint_area_m2 = 0.0;  // footprint area inside the zone
  double zone_area_m2 = 0.0;

  double mean_height_m() const { return count ? height_sum_m / static_cast<double>(count) : 0.0; }
  double bcr() const { return zone_area_m2 > 0.0 ? footprint_area_m2 / zone_area_m2 : 0.0; }
  ZoneStats& operator+=(const ZoneStats& o);
};

struct BuildingStats {
  ZoneStats uv;
  ZoneStats non_uv;

  std::optional<double> height_ratio() const;  // UV over non-UV mean height
  std::optional<double> bcr_ratio() const;
  nlohmann::json to_json() const;
};

// Buildings whose assignment point lies outside the GUB are ignored. Throws
// ValidationError for negative heights.
BuildingStats building_stats(const CityRecord& city, const std::vector<Building>& buildings,
                             Assignment rule = Assignment::Centroid);

// Per-city outputs of the analyze stage.
struct CityAnalysis {
  std::string city_id;
  std::string region_key;
  double gub_km2 = 0.0;
  double uv_km2 = 0.0;
  double proportion = 0.0;
  std::optional<PeripheryResult> periphery;  // absent for cities without UVs
  std::optional<BuildingStats> buildings;
};

CityAnalysis analyze_city(const CityRecord& city, const std::vector<Building>* buildings, double precision,
                          Assignment rule = Assignment::Centroid);
// Fills in patterns across the set.
void classify(std::vector<CityAnalysis>& cities);

std::string csv_header();
std::string csv_row(const CityAnalysis& c);
// Regression coefficients, residual ranking and pooled per-region building stats.
nlohmann::json summary_json(const std::vector<CityAnalysis>& cities, const std::vector<CityRecord>& records);

// National figures from the reference study. Documentation only.
namespace reference {
inline constexpr double national_uv_proportion = 0.08;
inline constexpr double share_of_cities_below_10pct = 0.65;
inline constexpr double built_up_r2 = 0.539;
}  // namespace reference

}  // namespace uvkit::analytics
