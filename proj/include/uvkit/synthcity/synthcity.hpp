#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvkit/analytics/analytics.hpp"
#include "uvkit/gateway/gateway.hpp"
#include "uvkit/geomesh/mask.hpp"

namespace uvkit::synthcity {

using geomesh::BinaryMask;
using geomesh::Point;
using geomesh::RegionPolygon;

struct SceneSpec {
  std::uint64_t seed = 7;
  double width_m = 1024.0;
  double height_m = 1024.0;
  Point origin{400000.0, 2500000.0};  // lower-left corner
  double resolution_m = 1.0;
  int crs_epsg = 32650;
  int n_uv = 25;
  double uv_area_min_m2 = 3000.0;
  double uv_area_max_m2 = 6000.0;
  double boundary_noise = 0.2;
  int confuser_count = 5;
  double separation_m = 16.0;

  // Building fabric.
  double uv_building_m = 7.0;
  double uv_building_pitch_m = 10.0;
  double uv_height_min_m = 3.0;
  double uv_height_max_m = 15.0;
  double formal_building_min_m = 20.0;
  double formal_building_max_m = 35.0;
  double formal_pitch_m = 70.0;
  double formal_height_min_m = 24.0;
  double formal_height_max_m = 90.0;

  // Throws ValidationError for out-of-range fields.
  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys throw ValidationError.
  static SceneSpec from_json(const nlohmann::json& j);
};

struct Scene {
  SceneSpec spec;
  geomesh::Frame frame;
  analytics::CityRecord city;  // gub = extent, uv_regions = planted truth
  std::vector<RegionPolygon> confusers;
  std::vector<analytics::Building> buildings;
  BinaryMask truth;       // planted UVs
  BinaryMask prediction;  // corrupted truth plus confusers; also serves as imagery
};

// Deterministic in spec. Throws ValidationError when the regions cannot be
// packed into the extent.
Scene generate(const SceneSpec& spec);

// Planted UVs with every contour vertex moved radially by up to
// boundary_noise of its radius. The same scene and noise give the same
// polygons.
std::vector<RegionPolygon> perturbed_regions(const Scene& scene, double boundary_noise);
// Rasterized perturbed regions, plus the confusers when asked.
BinaryMask corrupted_prediction(const Scene& scene, double boundary_noise, bool with_confusers);

// Scene directory layout.
inline constexpr const char* kManifest = "scene.json";
inline constexpr const char* kGub = "gub.geojson";
inline constexpr const char* kTruth = "truth.geojson";
inline constexpr const char* kConfusers = "confusers.geojson";
inline constexpr const char* kVectorContext = "vector_context.geojson";
inline constexpr const char* kBuildings = "buildings.geojson";
inline constexpr const char* kTruthGrid = "truth.grid";
inline constexpr const char* kImage = "image.grid";

void write_scene(const Scene& scene, const std::filesystem::path& dir);
// Reads the files back. Throws ValidationError for a missing or damaged file.
Scene load_scene(const std::filesystem::path& dir);

// Emits the scene's corrupted prediction for any frame aligned with the scene
// grid. When the request carries vector context, footprints tagged
// function=industrial in it are suppressed.
class SegmentationOracle : public gateway::SegmentationBackend {
 public:
  explicit SegmentationOracle(std::shared_ptr<const Scene> scene, std::string id = "oracle");
  gateway::SegmentationResponse segment(const gateway::TileRequest& req) override;

 private:
  std::shared_ptr<const Scene> scene_;
  std::string id_;
};

// Returns the true region at confidence 0.95 when a positive prompt lands in
// it, otherwise echoes the mask prompt (or nothing) at confidence 0.5.
class SnappingRefiner : public gateway::Refiner {
 public:
  explicit SnappingRefiner(std::shared_ptr<const Scene> scene, std::string id = "snapping");
  gateway::RefineResponse refine(const gateway::RefineRequest& req) override;

  static constexpr double kSnapConfidence = 0.95;
  static constexpr double kEchoConfidence = 0.5;

 private:
  std::shared_ptr<const Scene> scene_;
  std::string id_;
};

// Content embedding: each row describes one block of a 4 x 4 split of the
// cell (UV, confuser and building cover) plus a small geometry-keyed jitter.
// Identical cells of one scene get identical embeddings.
class SceneEmbeddingProvider : public gateway::EmbeddingProvider {
 public:
  explicit SceneEmbeddingProvider(std::shared_ptr<const Scene> scene);
  std::size_t dimension() const override { return 8; }
  sampler::EmbeddingMatrix embed(const sampler::GridCell& cell) override;

 private:
  std::shared_ptr<const Scene> scene_;
  BinaryMask confusers_;
  BinaryMask buildings_;
};

// Registers the segmentation oracle under both routes and the snapping
// refiner as the only refiner.
void register_oracles(gateway::Gateway& gw, std::shared_ptr<const Scene> scene);

}  // namespace uvkit::synthcity
