#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvkit/analytics/analytics.hpp"
#include "uvkit/assess/assess.hpp"
#include "uvkit/cli/config.hpp"
#include "uvkit/gateway/gateway.hpp"
#include "uvkit/sampler/sampler.hpp"
#include "uvkit/synthcity/synthcity.hpp"

namespace uvkit::cli {

namespace fs = std::filesystem;

// Files a run leaves in its work directory.
inline constexpr const char* kTilesIndex = "tiles.json";
inline constexpr const char* kTilesDir = "tiles";
inline constexpr const char* kPrediction = "prediction.grid";
inline constexpr const char* kPredictionGeo = "prediction.geojson";
inline constexpr const char* kRefined = "refined.grid";
inline constexpr const char* kRefinedGeo = "refined.geojson";
inline constexpr const char* kRefineLog = "refine_log.json";
inline constexpr const char* kRanking = "ranking.json";
inline constexpr const char* kCandidates = "candidates.geojson";
inline constexpr const char* kCitiesCsv = "cities.csv";
inline constexpr const char* kSummary = "summary.json";

struct TileSpec {
  std::string tile_id;
  int col = 0;  // pixel offset in the scene grid
  int row = 0;
  geomesh::Frame frame;
};

// Windows of tile_px covering the extent at the given stride (0: tile_px).
// Edge tiles overhang the extent and read as background there.
std::vector<TileSpec> plan_tiles(const geomesh::Frame& extent, int tile_px, int stride_px = 0);

// Merges tile masks onto the extent. "union" sets a pixel when any covering
// tile does; "majority" when more than half of them do.
geomesh::BinaryMask stitch(const geomesh::Frame& extent, const std::vector<TileSpec>& tiles,
                           const std::vector<geomesh::BinaryMask>& masks, const std::string& rule);

// "env" becomes UVKIT_BACKEND_URI; anything else is returned unchanged.
// Throws ConfigError when the variable is unset.
std::string resolve_backend(const std::string& value);

// Registers backends named by the config. Oracle backends need `scene`.
// Returns false for a refiner set to "none".
void attach_segmenter(gateway::Gateway& gw, const PipelineConfig& cfg, std::shared_ptr<const synthcity::Scene> scene);
bool attach_refiner(gateway::Gateway& gw, const PipelineConfig& cfg, std::shared_ptr<const synthcity::Scene> scene,
                    const fs::path& workdir);
// Returns the provider id.
std::string attach_embedder(gateway::Gateway& gw, const PipelineConfig& cfg,
                            std::shared_ptr<const synthcity::Scene> scene);

// Cuts the scene image into inference tiles under work/tiles.
std::vector<TileSpec> run_tile(const fs::path& scene_dir, const fs::path& work_dir, const PipelineConfig& cfg);

struct InferResult {
  geomesh::BinaryMask prediction;
  std::size_t tiles = 0;
};
// Segments every tile (tiling first when no index exists) and writes the
// stitched prediction. Requests carry the scene's vector context when it has one.
InferResult run_infer(const fs::path& scene_dir, const fs::path& work_dir, gateway::Gateway& gw,
                      const PipelineConfig& cfg, int jobs);

struct RefineResult {
  geomesh::BinaryMask refined;
  std::size_t regions = 0;
  std::size_t fallbacks = 0;
  std::size_t backend_calls = 0;
  bool within_budget = true;
};
// Refines the stitched prediction tile by tile. A null gateway disables
// refinement: regions are only cleaned (opening and small-part removal).
RefineResult run_refine(const fs::path& work_dir, gateway::Gateway* gw, const PipelineConfig& cfg, int jobs);

// Regions from a .grid raster (vectorized) or a GeoJSON file.
geomesh::PolygonSet read_regions(const fs::path& path);

struct CityInput {
  std::string city_id;
  std::string stratum;
  geomesh::PolygonSet predicted;
  geomesh::PolygonSet truth;
  geomesh::PolygonSet extent;
  geomesh::Frame frame;
};
// Truth, extent and frame from a scene directory; predictions from `pred`.
CityInput load_city(const fs::path& scene_dir, const fs::path& pred);

std::vector<assess::HexCell> sampled_cells(const geomesh::PolygonSet& extent, const PipelineConfig& cfg);
assess::AssessmentReport run_assess(const std::vector<CityInput>& cities, const PipelineConfig& cfg);

struct NamedPath {
  std::string name;
  fs::path path;
};
std::vector<assess::ProductRow> run_compare(const std::vector<NamedPath>& products, const CityInput& city,
                                            const PipelineConfig& cfg);

struct SampleRankResult {
  sampler::CityGrid grid;
  std::vector<sampler::SimilarityScore> scores;
  sampler::Bands bands;
  nlohmann::json ranking;
};
// Scores every non-anchor cell of the extent against the anchors.
SampleRankResult run_sample_rank(const geomesh::Box& extent, const std::vector<std::int64_t>& anchors,
                                 gateway::Gateway& gw, const std::string& provider_id, const PipelineConfig& cfg,
                                 int jobs);
// The cell with the most planted UV cover; stands in for a hand-picked anchor.
std::int64_t pick_anchor(const synthcity::Scene& scene, const sampler::CityGrid& grid);

struct AnalyzeResult {
  std::vector<analytics::CityAnalysis> rows;
  std::string csv;
  nlohmann::json summary;
};
AnalyzeResult run_analyze(const std::vector<analytics::CityRecord>& cities,
                          const std::vector<std::vector<analytics::Building>>& buildings, double precision = 1.0);

// Records what a command read and wrote: config hash, seeds and FNV-1a
// digests of every input and output file. Written to <dir>/run_<command>.json.
void write_run_manifest(const fs::path& dir, const std::string& command, const PipelineConfig& cfg,
                        const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                        const nlohmann::json& extra = nlohmann::json::object());

std::string file_digest(const fs::path& path);

}  // namespace uvkit::cli
