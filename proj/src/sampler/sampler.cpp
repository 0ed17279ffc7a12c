#include "uvkit/sampler/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "uvkit/error.hpp"
#include "uvkit/gateway/gateway.hpp"
#include "uvkit/geomesh/clip.hpp"
#include "uvkit/geomesh/contour.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::sampler {

std::string to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Anchor: return "anchor";
    case CellStatus::Unlabeled: return "unlabeled";
    case CellStatus::AnnotatedPositive: return "annotated-positive";
    case CellStatus::AnnotatedNegative: return "annotated-negative";
  }
  return "unlabeled";
}

CellStatus parse_cell_status(const std::string& s) {
  if (s == "anchor") return CellStatus::Anchor;
  if (s == "unlabeled") return CellStatus::Unlabeled;
  if (s == "annotated-positive") return CellStatus::AnnotatedPositive;
  if (s == "annotated-negative") return CellStatus::AnnotatedNegative;
  throw ValidationError("unknown cell status '" + s + "'");
}

void EmbeddingMatrix::validate() const {
  if (rows == 0 || cols == 0) throw ValidationError("embedding: empty matrix");
  if (values.size() != rows * cols) throw ValidationError("embedding: value count does not match shape");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("embedding: non-finite value");
  }
}


std::int64_t CityGrid::cell_at(geomesh::Point p) const {
  if (!extent.contains(p)) return -1;
  int col = static_cast<int>(std::floor((p.x - extent.min_x) / cell_size));
  int row = static_cast<int>(std::floor((extent.max_y - p.y) / cell_size));
  col = std::clamp(col, 0, cols - 1);
  row = std::clamp(row, 0, rows - 1);
  return static_cast<std::int64_t>(row) * cols + col;
}

CityGrid make_grid(const geomesh::Box& extent, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ValidationError("grid: cell size must be positive");
  if (!(extent.width() > 0.0) || !(extent.height() > 0.0)) throw ValidationError("grid: empty extent");
  CityGrid g;
  g.extent = extent;
  g.cell_size = cell_size;
  g.cols = static_cast<int>(std::ceil(extent.width() / cell_size - 1e-9));
  g.rows = static_cast<int>(std::ceil(extent.height() / cell_size - 1e-9));
  g.cells.reserve(static_cast<std::size_t>(g.rows) * g.cols);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      GridCell cell;
      cell.cell_id = static_cast<std::int64_t>(r) * g.cols + c;
      cell.row = r;
      cell.col = c;
      cell.bounds = {extent.min_x + c * cell_size, extent.max_y - (r + 1) * cell_size,
                     extent.min_x + (c + 1) * cell_size, extent.max_y - r * cell_size};
      cell.clipped = {std::max(cell.bounds.min_x, extent.min_x), std::max(cell.bounds.min_y, extent.min_y),
                      std::min(cell.bounds.max_x, extent.max_x), std::min(cell.bounds.max_y, extent.max_y)};
      g.cells.push_back(cell);
    }
  }
  return g;
}

std::vector<double> mean_pool(const EmbeddingMatrix& e) {
  e.validate();
  std::vector<double> out(e.cols);
  for (std::size_t c = 0; c < e.cols; ++c) {
    CompensatedSum s;
    for (std::size_t r = 0; r < e.rows; ++r) s.add(e.at(r, c));
    out[c] = s.value() / static_cast<double>(e.rows);
  }
  return out;
}

namespace {

double norm(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x * x);
  return std::sqrt(s.value());
}

}  // namespace

double similarity(const std::vector<double>& u, const std::vector<std::vector<double>>& anchors) {
  if (anchors.empty()) throw ValidationError("similarity: no anchors");
  const double nu = norm(u);
  if (!(nu > 0.0)) throw ValidationError("similarity: zero-norm embedding");
  CompensatedSum total;
  for (const auto& a : anchors) {
    if (a.size() != u.size()) throw ValidationError("similarity: dimension mismatch");
    const double na = norm(a);
    if (!(na > 0.0)) throw ValidationError("similarity: zero-norm anchor embedding");
    CompensatedSum dot;
    for (std::size_t i = 0; i < u.size(); ++i) dot.add(u[i] * a[i]);
    total.add(std::clamp(dot.value() / (nu * na), -1.0, 1.0));
  }
  return total.value() / static_cast<double>(anchors.size());
}

void BandSpec::validate() const {
  if (!(top_frac > 0.0 && top_frac < band_low && band_low < band_high && band_high <= 1.0)) {
    throw ValidationError("bands: require 0 < top_frac < band_low < band_high <= 1");
  }
}

std::size_t fraction_count_ceil(double frac, std::size_t n) {
  const double x = frac * static_cast<double>(n);
  return static_cast<std::size_t>(std::max(0.0, std::ceil(x - 1e-9)));
}

Bands rank_and_band(std::vector<SimilarityScore> scores, const BandSpec& spec) {
  spec.validate();
  std::sort(scores.begin(), scores.end(), [](const SimilarityScore& a, const SimilarityScore& b) {
    if (a.alpha_sim != b.alpha_sim) return a.alpha_sim > b.alpha_sim;
    return a.cell_id < b.cell_id;
  });
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = static_cast<int>(i + 1);
  const std::size_t n = scores.size();
  const std::size_t top = std::min(n, fraction_count_ceil(spec.top_frac, n));
  const std::size_t lo = std::min(n, fraction_count_ceil(spec.band_low, n));
  const std::size_t hi = std::min(n, fraction_count_ceil(spec.band_high, n));
  Bands b;
  b.confusion.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(top));
  b.diversity.assign(scores.begin() + static_cast<std::ptrdiff_t>(lo), scores.begin() + static_cast<std::ptrdiff_t>(hi));
  b.ranked = std::move(scores);
  return b;
}

std::vector<SimilarityScore> score_cells(const std::vector<GridCell>& cells, gateway::Gateway& gw,
                                         const std::string& provider_id, int jobs) {
  std::vector<std::vector<double>> pooled(cells.size());
  std::vector<std::size_t> dims(cells.size(), 0);
  std::size_t next = 0;
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lk(mu);
        if (next >= cells.size() || failure) return;
        i = next++;
      }
      try {
        const auto e = gw.embed(cells[i], provider_id);
        dims[i] = e.cols;
        pooled[i] = mean_pool(e);
      } catch (...) {
        std::lock_guard lk(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 1; i < dims.size(); ++i) {
    if (dims[i] != dims[0]) throw ValidationError("embeddings in one run must share a dimension");
  }
  std::vector<std::vector<double>> anchors;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].status == CellStatus::Anchor) anchors.push_back(pooled[i]);
  }
  if (anchors.empty()) throw ValidationError("scoring needs at least one anchor cell");
  std::vector<SimilarityScore> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].status != CellStatus::Unlabeled) continue;
    out.push_back({cells[i].cell_id, similarity(pooled[i], anchors), 0});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.cell_id < b.cell_id; });
  return out;
}

std::vector<TrainingTile> crop_training_tiles(const std::vector<GridCell>& cells,
                                              const std::vector<geomesh::RegionPolygon>& annotations,
                                              double resolution, int tile_px) {
  if (!(resolution > 0.0) || tile_px < 1) throw ValidationError("crop: resolution and tile size must be positive");
  std::vector<TrainingTile> out;
  for (const auto& cell : cells) {
    if (cell.status == CellStatus::Unlabeled) {
      throw ValidationError("crop: cell " + std::to_string(cell.cell_id) + " has no annotation status");
    }
    const double px_w = cell.bounds.width() / resolution;
    const double px_h = cell.bounds.height() / resolution;
    const long nx = std::lround(px_w / tile_px);
    const long ny = std::lround(px_h / tile_px);
    if (nx < 1 || ny < 1 || std::abs(px_w - nx * tile_px) > 1e-6 || std::abs(px_h - ny * tile_px) > 1e-6) {
      throw ValidationError("crop: cell " + std::to_string(cell.cell_id) + " is not a whole number of tiles");
    }
    const geomesh::Frame cell_frame{static_cast<int>(nx * tile_px), static_cast<int>(ny * tile_px),
                                    {cell.bounds.min_x, cell.bounds.max_y}, resolution};
    std::vector<geomesh::RegionPolygon> local;
    if (cell.status != CellStatus::AnnotatedNegative) {
      for (const auto& a : annotations) {
        if (a.bounds().intersects(cell.bounds)) local.push_back(a);
      }
    }
    for (long tr = 0; tr < ny; ++tr) {
      for (long tc = 0; tc < nx; ++tc) {
        const auto f = cell_frame.window(static_cast<int>(tc * tile_px), static_cast<int>(tr * tile_px), tile_px, tile_px);
        out.push_back({cell.cell_id, static_cast<int>(tc), static_cast<int>(tr),
                       geomesh::rasterize(local, f, geomesh::OutsidePolicy::Skip)});
      }
    }
  }
  return out;
}

nlohmann::json write_tile_manifest(const std::vector<TrainingTile>& tiles, const std::filesystem::path& dir) {
  nlohmann::json index = nlohmann::json::array();
  for (const auto& t : tiles) {
    const std::string name = "tile_" + std::to_string(t.cell_id) + "_" + std::to_string(t.tile_col) + "_" +
                             std::to_string(t.tile_row) + ".grid";
    geomesh::write_mask(dir / name, t.label);
    index.push_back({{"cell_id", t.cell_id},
                     {"tile_col", t.tile_col},
                     {"tile_row", t.tile_row},
                     {"label_ref", name},
                     {"positive_px", t.label.count()}});
  }
  return {{"tiles", index}};
}

geomesh::FeatureCollection candidates_geojson(const Bands& bands, const std::vector<GridCell>& cells, int crs_epsg) {
  std::map<std::int64_t, const GridCell*> by_id;
  for (const auto& c : cells) by_id[c.cell_id] = &c;
  geomesh::FeatureCollection fc;
  fc.crs_epsg = crs_epsg;
  auto emit = [&](const std::vector<SimilarityScore>& set, const char* band) {
    for (const auto& s : set) {
      auto it = by_id.find(s.cell_id);
      if (it == by_id.end()) throw ValidationError("candidate cell " + std::to_string(s.cell_id) + " not in grid");
      geomesh::Feature f;
      f.parts.push_back(geomesh::box_polygon(it->second->clipped));
      f.properties = {{"cell_id", s.cell_id}, {"alpha_sim", s.alpha_sim}, {"rank", s.rank}, {"band", band}};
      fc.features.push_back(std::move(f));
    }
  };
  emit(bands.confusion, "confusion");
  emit(bands.diversity, "diversity");
  return fc;
}

}  // namespace uvkit::sampler
