#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvkit/geomesh/clip.hpp"
#include "uvkit/geomesh/mask.hpp"

namespace uvkit::assess {

using geomesh::PolygonSet;
using geomesh::RegionPolygon;

// One predicted or annotated region; several parts when clipping split it.
using Region = PolygonSet;

// Each polygon as its own region.
std::vector<Region> as_regions(const PolygonSet& polys);

struct HexCell {
  std::int64_t cell_id = 0;
  int row = 0;  // lattice row, counted from the top
  int col = 0;  // lattice column, counted from the left
  geomesh::Point center;
  double circumradius = 0.0;
  RegionPolygon polygon;
  bool sampled = false;
};

// Flat-top hexagons with one center on the extent's bounding-box center. A
// cell is kept when it overlaps the extent with positive area. cell_id is the
// raster index row * columns + col over the enumeration window. Throws
// ValidationError for a non-positive radius or an empty extent.
std::vector<HexCell> hex_tessellate(const PolygonSet& extent, double circumradius);
std::vector<HexCell> hex_tessellate(const RegionPolygon& extent, double circumradius);

// round(fraction * n) cells chosen by a keyed hash of (seed, cell_id), so the
// subset does not depend on enumeration order. Returns all cells with the
// `sampled` flag set. Throws ValidationError unless 0 < fraction <= 1.
std::vector<HexCell> sample_cells(std::vector<HexCell> cells, double fraction, std::uint64_t seed);
std::vector<HexCell> sampled_only(const std::vector<HexCell>& cells);
PolygonSet footprint(const std::vector<HexCell>& cells);

struct MatchedPair {
  std::size_t predicted = 0;
  std::size_t truth = 0;
  double overlap_area = 0.0;
};

struct DetectionTally {
  std::size_t tp = 0;              // predicted regions overlapping the truth
  std::size_t fp = 0;
  std::size_t truth_detected = 0;  // truth regions overlapped by any prediction
  std::size_t missed = 0;
  std::vector<MatchedPair> pairs;

  double precision() const;
  double recall() const;
  double f1() const;
  DetectionTally& operator+=(const DetectionTally& o);
};

// A predicted region is a true positive when its overlap with the union of
// truth exceeds min_overlap_frac of its own area (any positive overlap at 0).
// A truth region is detected when some prediction overlaps it.
DetectionTally detection_metrics(const std::vector<Region>& predicted, const std::vector<Region>& truth,
                                 double min_overlap_frac = 0.0);

struct PixelCounts {
  std::size_t intersection = 0;
  std::size_t union_ = 0;
  std::size_t predicted = 0;
  std::size_t truth = 0;

  double iou() const;   // 1 when both are empty
  double dice() const;  // 1 when both are empty
  PixelCounts& operator+=(const PixelCounts& o);
};

// Rasterizes both sets on `frame` and counts pixels inside `within` (all of
// the frame when null). Throws FrameMismatch when `within` uses another frame.
PixelCounts pixel_counts(const PolygonSet& predicted, const PolygonSet& truth, const geomesh::Frame& frame,
                         const geomesh::BinaryMask* within = nullptr);
double segmentation_iou(const PolygonSet& predicted, const PolygonSet& truth, const geomesh::Frame& frame,
                        const geomesh::BinaryMask* within = nullptr);
// Raster inputs. Throws FrameMismatch.
double segmentation_iou(const geomesh::BinaryMask& predicted, const geomesh::BinaryMask& truth,
                        const geomesh::BinaryMask* within = nullptr);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  DetectionTally tally;
  PixelCounts pixels;

  static Metrics from(const DetectionTally& t, const PixelCounts& px);
  nlohmann::json to_json() const;
};

// One city's evaluation inputs, already restricted to its sample area.
struct CityEvaluation {
  std::string city_id;
  std::string stratum;  // e.g. "Northeast"
  std::vector<Region> predicted;
  std::vector<Region> truth;
  PixelCounts pixels;
  double sample_area_m2 = 0.0;
};

// Clips predictions and truth to the sampled cells and counts pixels on `frame`.
CityEvaluation evaluate_city(const std::string& city_id, const std::string& stratum, const PolygonSet& predicted,
                             const PolygonSet& truth, const std::vector<HexCell>& sampled_cells,
                             const geomesh::Frame& frame);

inline const std::vector<double> kSensitivityLevels{0.0, 0.1, 0.5};

struct AssessmentReport {
  Metrics overall;  // pooled over every city
  std::map<std::string, Metrics> strata;
  std::map<std::string, Metrics> cities;
  std::map<double, Metrics> sensitivity;  // overall metrics per min_overlap_frac
  double min_overlap_frac = 0.0;
  double sample_area_km2 = 0.0;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

AssessmentReport assess(const std::vector<CityEvaluation>& cities, double min_overlap_frac = 0.0);

struct Product {
  std::string name;
  PolygonSet regions;
  std::optional<PolygonSet> coverage;  // unset: the whole frame
};

struct ProductRow {
  std::string name;
  Metrics metrics;
};

// Scores every product on the intersection of all coverage footprints (and of
// `sample_area` when given). Rows sorted by f1 descending, then by name.
// Throws ValidationError for fewer than two products or an empty overlap.
std::vector<ProductRow> compare_products(const std::vector<Product>& products, const PolygonSet& truth,
                                         const geomesh::Frame& frame, const PolygonSet* sample_area = nullptr,
                                         double min_overlap_frac = 0.0);
nlohmann::json comparison_json(const std::vector<ProductRow>& rows);
std::string comparison_table(const std::vector<ProductRow>& rows);

// Published reference accuracy. Documentation only.
namespace reference {
inline constexpr double national_f1 = 0.77;
inline constexpr double national_iou = 0.60;
inline constexpr double national_sample_area_km2 = 40.6;
}  // namespace reference

}  // namespace uvkit::assess
