#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvkit/geomesh/mask.hpp"
#include "uvkit/geomesh/polygon.hpp"

namespace uvkit::geomesh {

// Binary mask exchange format: one ASCII header line
//   GRID <width> <height> <origin_x> <origin_y> <resolution>\n
// followed by width*height raw bytes, each 0 or 1, row-major from the top row.
void write_mask(std::ostream& out, const BinaryMask& mask);
BinaryMask read_mask(std::istream& in);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask(const std::filesystem::path& path);

// Reads only the header of a GRID or PGRID file.
Frame read_frame(const std::filesystem::path& path);

// Probability grid: "PGRID <w> <h> <ox> <oy> <res>\n" then w*h little-endian float32.
void write_probabilities(const std::filesystem::path& path, const ProbabilityGrid& grid);
ProbabilityGrid read_probabilities(const std::filesystem::path& path);

struct Feature {
  std::vector<RegionPolygon> parts;  // Polygon -> 1 part, MultiPolygon -> n parts
  nlohmann::json properties = nlohmann::json::object();
};

// GeoJSON FeatureCollection in a projected CRS named by a top-level `crs_epsg`.
struct FeatureCollection {
  int crs_epsg = 0;
  std::vector<Feature> features;
  nlohmann::json members = nlohmann::json::object();  // other top-level members

  std::vector<RegionPolygon> polygons() const;
  // Polygons of features whose property `key` equals `value`.
  std::vector<RegionPolygon> polygons_where(const std::string& key, const std::string& value) const;
};

// Throws ValidationError on malformed GeoJSON or non-simple rings.
FeatureCollection parse_geojson(const nlohmann::json& doc);
FeatureCollection read_geojson(const std::filesystem::path& path);
nlohmann::json to_geojson(const FeatureCollection& fc);
void write_geojson(const std::filesystem::path& path, const FeatureCollection& fc);

nlohmann::json polygon_coordinates(const RegionPolygon& poly);

// Whole file as bytes; throws ValidationError naming the path when missing.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace uvkit::geomesh
