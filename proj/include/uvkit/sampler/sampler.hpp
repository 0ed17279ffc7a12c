#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvkit/geomesh/io.hpp"
#include "uvkit/geomesh/mask.hpp"
#include "uvkit/sampler/types.hpp"

namespace uvkit::gateway {
class Gateway;
}

namespace uvkit::sampler {

// Square grid anchored at the top-left corner of the extent. Cells on the
// right and bottom margins overhang the extent and are clipped.
struct CityGrid {
  geomesh::Box extent;
  double cell_size = 512.0;
  int rows = 0;
  int cols = 0;
  std::vector<GridCell> cells;  // row-major from the top; cell_id = row * cols + col

  // Cell owning p under half-open cell intervals (the extent's right and
  // bottom edges belong to the last cells). -1 outside the extent.
  std::int64_t cell_at(geomesh::Point p) const;
};

// Throws ValidationError for an empty extent or non-positive cell size.
CityGrid make_grid(const geomesh::Box& extent, double cell_size = 512.0);

// Column-wise mean over patches.
std::vector<double> mean_pool(const EmbeddingMatrix& e);

// Mean over anchors of the cosine similarity with u. Throws ValidationError
// for zero-norm vectors, mismatched dimensions or no anchors.
double similarity(const std::vector<double>& u, const std::vector<std::vector<double>>& anchors);

struct SimilarityScore {
  std::int64_t cell_id = 0;
  double alpha_sim = 0.0;
  int rank = 0;  // 1-based position in the descending order
};

struct BandSpec {
  double top_frac = 0.05;
  double band_low = 0.10;
  double band_high = 0.30;

  // Throws ValidationError unless 0 < top_frac < band_low < band_high <= 1.
  void validate() const;
};

struct Bands {
  std::vector<SimilarityScore> ranked;     // descending alpha_sim, ties by ascending cell_id
  std::vector<SimilarityScore> confusion;  // ranks 1..ceil(top_frac n)
  std::vector<SimilarityScore> diversity;  // ranks (ceil(band_low n), ceil(band_high n)]
};

// ceil(frac * n) that ignores floating-point dust, so 0.3 * 100 gives 30.
std::size_t fraction_count_ceil(double frac, std::size_t n);

Bands rank_and_band(std::vector<SimilarityScore> scores, const BandSpec& spec = {});

// Embeds every cell through the gateway and scores the unlabeled ones
// against the anchors. Output is ordered by cell_id. Throws ValidationError
// without anchors or when providers disagree on the dimension.
std::vector<SimilarityScore> score_cells(const std::vector<GridCell>& cells, gateway::Gateway& gw,
                                         const std::string& provider_id, int jobs = 1);

struct TrainingTile {
  std::int64_t cell_id = 0;
  int tile_col = 0;
  int tile_row = 0;
  geomesh::BinaryMask label;
};

// Splits each annotated cell into tile_px x tile_px label tiles at the given
// resolution. Positive (and anchor) cells rasterize the annotations; negative
// cells give empty labels. Throws ValidationError for unlabeled cells or when
// the cell side is not a whole number of tiles.
std::vector<TrainingTile> crop_training_tiles(const std::vector<GridCell>& cells,
                                              const std::vector<geomesh::RegionPolygon>& annotations,
                                              double resolution, int tile_px = 256);

// Writes each label as <dir>/tile_<cell>_<col>_<row>.grid and returns the JSON index.
nlohmann::json write_tile_manifest(const std::vector<TrainingTile>& tiles, const std::filesystem::path& dir);

// Candidate cells with alpha_sim, rank and band tag ("confusion" or "diversity").
geomesh::FeatureCollection candidates_geojson(const Bands& bands, const std::vector<GridCell>& cells,
                                              int crs_epsg = 0);

}  // namespace uvkit::sampler
