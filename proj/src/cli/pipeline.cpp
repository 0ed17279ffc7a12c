#include "uvkit/cli/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <mutex>
#include <thread>

#include "uvkit/error.hpp"
#include "uvkit/gateway/remote.hpp"
#include "uvkit/geomesh.hpp"
#include "uvkit/numeric.hpp"
#include "uvkit/promptgen/promptgen.hpp"

namespace uvkit::cli {

namespace {

using geomesh::BinaryMask;
using geomesh::Frame;

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure after every worker stops.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

nlohmann::json frame_json(const Frame& f) {
  return {{"width", f.width}, {"height", f.height}, {"origin_x", f.origin.x}, {"origin_y", f.origin.y},
          {"resolution", f.resolution}};
}

nlohmann::json read_json(const fs::path& p) {
  const auto j = nlohmann::json::parse(geomesh::read_file(p), nullptr, false);
  if (j.is_discarded()) throw ValidationError(p.string() + ": not valid JSON");
  return j;
}

int scene_epsg(const fs::path& scene_dir) {
  const auto m = read_json(scene_dir / synthcity::kManifest);
  return m.at("spec").value("crs_epsg", 0);
}

void write_regions(const fs::path& path, const BinaryMask& mask, int epsg) {
  geomesh::FeatureCollection fc;
  fc.crs_epsg = epsg;
  int id = 0;
  for (auto& p : geomesh::vectorize(mask)) fc.features.push_back({{std::move(p)}, {{"region_id", id++}}});
  geomesh::write_geojson(path, fc);
}

BinaryMask crop_to(const BinaryMask& src, const TileSpec& t) {
  return BinaryMask(t.frame, src.crop(t.col, t.row, t.frame.width, t.frame.height).data());
}

std::vector<TileSpec> read_tile_index(const fs::path& work_dir, int& tile_px) {
  const auto j = read_json(work_dir / kTilesIndex);
  tile_px = j.at("tile_px").get<int>();
  const Frame extent{j.at("extent").at("width").get<int>(), j.at("extent").at("height").get<int>(),
                     {j.at("extent").at("origin_x").get<double>(), j.at("extent").at("origin_y").get<double>()},
                     j.at("extent").at("resolution").get<double>()};
  return plan_tiles(extent, tile_px, j.at("stride_px").get<int>());
}

}  // namespace

std::vector<TileSpec> plan_tiles(const Frame& extent, int tile_px, int stride_px) {
  extent.validate();
  if (tile_px <= 0) throw ValidationError("tile size must be positive");
  const int stride = stride_px == 0 ? tile_px : stride_px;
  if (stride <= 0 || stride > tile_px) throw ValidationError("tile stride must be in (0, tile size]");
  auto starts = [&](int size) {
    std::vector<int> s;
    for (int v = 0;; v += stride) {
      s.push_back(v);
      if (v + tile_px >= size) break;
    }
    return s;
  };
  std::vector<TileSpec> out;
  for (int r : starts(extent.height)) {
    for (int c : starts(extent.width)) {
      char id[32];
      std::snprintf(id, sizeof id, "r%05d_c%05d", r, c);
      out.push_back({id, c, r, extent.window(c, r, tile_px, tile_px)});
    }
  }
  return out;
}

BinaryMask stitch(const Frame& extent, const std::vector<TileSpec>& tiles, const std::vector<BinaryMask>& masks,
                  const std::string& rule) {
  if (tiles.size() != masks.size()) throw ValidationError("stitch: tile and mask counts differ");
  if (rule != "union" && rule != "majority") throw ValidationError("stitch: unknown rule '" + rule + "'");
  std::vector<std::uint16_t> votes(extent.size(), 0), cover(extent.size(), 0);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const auto& t = tiles[k];
    if (!masks[k].frame().same_geometry(t.frame)) throw FrameMismatch("stitch: mask frame differs from tile " + t.tile_id);
    for (int r = 0; r < t.frame.height; ++r) {
      const int er = t.row + r;
      if (er >= extent.height) break;
      for (int c = 0; c < t.frame.width; ++c) {
        const int ec = t.col + c;
        if (ec >= extent.width) break;
        const std::size_t i = static_cast<std::size_t>(er) * extent.width + ec;
        ++cover[i];
        votes[i] += masks[k].at(c, r);
      }
    }
  }
  BinaryMask out(extent);
  for (int r = 0; r < extent.height; ++r) {
    for (int c = 0; c < extent.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * extent.width + c;
      out.set(c, r, rule == "union" ? votes[i] > 0 : 2 * votes[i] > cover[i]);
    }
  }
  return out;
}

std::string resolve_backend(const std::string& value) {
  if (value != "env") return value;
  const auto uri = gateway::backend_uri_from_env();
  if (!uri) throw ConfigError("backend is \"env\" but UVKIT_BACKEND_URI is not set");
  return *uri;
}

void attach_segmenter(gateway::Gateway& gw, const PipelineConfig& cfg, std::shared_ptr<const synthcity::Scene> scene) {
  const std::string b = resolve_backend(cfg.segmentation_backend);
  std::shared_ptr<gateway::SegmentationBackend> seg;
  if (b == "oracle") {
    if (!scene) throw ConfigError("the oracle segmentation backend needs a synthetic scene");
    seg = std::make_shared<synthcity::SegmentationOracle>(scene);
  } else {
    seg = std::make_shared<gateway::RemoteSegmentation>(gateway::make_transport(b), cfg.timeout_s);
  }
  gw.register_segmenter(gateway::kMultimodal, seg);
  gw.register_segmenter(gateway::kRsOnly, seg);
}

bool attach_refiner(gateway::Gateway& gw, const PipelineConfig& cfg, std::shared_ptr<const synthcity::Scene> scene,
                    const fs::path& workdir) {
  const std::string b = resolve_backend(cfg.refiner_backend);
  if (b == "none") return false;
  if (b == "oracle") {
    if (!scene) throw ConfigError("the oracle refiner needs a synthetic scene");
    gw.register_refiner("snapping", std::make_shared<synthcity::SnappingRefiner>(scene));
  } else {
    gw.register_refiner("remote", std::make_shared<gateway::RemoteRefiner>(gateway::make_transport(b),
                                                                           workdir / "refiner", cfg.timeout_s));
  }
  return true;
}

std::string attach_embedder(gateway::Gateway& gw, const PipelineConfig& cfg,
                            std::shared_ptr<const synthcity::Scene> scene) {
  const std::string b = resolve_backend(cfg.embedding_backend);
  if (b == "oracle") {
    if (!scene) throw ConfigError("the oracle embedding provider needs a synthetic scene");
    gw.register_embedder("scene", std::make_shared<synthcity::SceneEmbeddingProvider>(scene));
    return "scene";
  }
  gw.register_embedder("remote", std::make_shared<gateway::RemoteEmbedding>(
                                     gateway::make_transport(b), static_cast<std::size_t>(cfg.embedding_dim),
                                     cfg.timeout_s));
  return "remote";
}

std::vector<TileSpec> run_tile(const fs::path& scene_dir, const fs::path& work_dir, const PipelineConfig& cfg) {
  const BinaryMask image = geomesh::read_mask(scene_dir / synthcity::kImage);
  const auto tiles = plan_tiles(image.frame(), cfg.train_tile_px, cfg.tile_stride_px);
  fs::create_directories(work_dir / kTilesDir);
  nlohmann::json index = {{"tile_px", cfg.train_tile_px},
                          {"stride_px", cfg.tile_stride_px == 0 ? cfg.train_tile_px : cfg.tile_stride_px},
                          {"extent", frame_json(image.frame())},
                          {"tiles", nlohmann::json::array()}};
  for (const auto& t : tiles) {
    const fs::path rel = fs::path(kTilesDir) / (t.tile_id + ".grid");
    geomesh::write_mask(work_dir / rel, crop_to(image, t));
    index["tiles"].push_back({{"tile_id", t.tile_id}, {"col", t.col}, {"row", t.row}, {"image_ref", rel.string()}});
  }
  geomesh::write_file(work_dir / kTilesIndex, index.dump(2) + "\n");
  return tiles;
}

InferResult run_infer(const fs::path& scene_dir, const fs::path& work_dir, gateway::Gateway& gw,
                      const PipelineConfig& cfg, int jobs) {
  if (!fs::exists(work_dir / kTilesIndex)) run_tile(scene_dir, work_dir, cfg);
  int tile_px = 0;
  const auto tiles = read_tile_index(work_dir, tile_px);
  const Frame extent = geomesh::read_frame(scene_dir / synthcity::kImage);
  const fs::path context = scene_dir / synthcity::kVectorContext;
  const bool has_context = fs::exists(context);

  std::vector<BinaryMask> masks(tiles.size());
  parallel_for(tiles.size(), jobs, [&](std::size_t i) {
    gateway::TileRequest req;
    req.tile_id = tiles[i].tile_id;
    req.image_ref = fs::absolute(work_dir / kTilesDir / (tiles[i].tile_id + ".grid")).string();
    req.tile_size = tile_px;
    req.frame = tiles[i].frame;
    if (has_context) {
      req.vector_context_present = true;
      req.vector_ref = fs::absolute(context).string();
    }
    masks[i] = gw.segment(req).probabilities.threshold(static_cast<float>(cfg.probability_threshold));
  });
  InferResult out;
  out.tiles = tiles.size();
  out.prediction = stitch(extent, tiles, masks, cfg.stitch);
  geomesh::write_mask(work_dir / kPrediction, out.prediction);
  write_regions(work_dir / kPredictionGeo, out.prediction, scene_epsg(scene_dir));
  return out;
}

RefineResult run_refine(const fs::path& work_dir, gateway::Gateway* gw, const PipelineConfig& cfg, int jobs) {
  const BinaryMask prediction = geomesh::read_mask(work_dir / kPrediction);
  int epsg = 0;
  if (fs::exists(work_dir / kPredictionGeo)) epsg = geomesh::read_geojson(work_dir / kPredictionGeo).crs_epsg;
  const auto tiles = plan_tiles(prediction.frame(), cfg.refine_tile_px, cfg.tile_stride_px);
  const auto pcfg = cfg.prompts();

  std::vector<BinaryMask> masks(tiles.size());
  std::vector<nlohmann::json> logs(tiles.size());
  std::vector<std::size_t> regions(tiles.size()), fallbacks(tiles.size()), calls(tiles.size());
  parallel_for(tiles.size(), jobs, [&](std::size_t i) {
    const BinaryMask initial = crop_to(prediction, tiles[i]);
    if (!gw) {
      const auto comps = promptgen::preprocess(initial, pcfg.open_radius_px, pcfg.min_area_px);
      masks[i] = comps.foreground();
      regions[i] = static_cast<std::size_t>(comps.count);
      logs[i] = {{"tile_id", tiles[i].tile_id}, {"refinement", "disabled"}, {"regions", comps.count}};
      return;
    }
    auto t = promptgen::refine_tile(initial, *gw, tiles[i].tile_id, pcfg);
    masks[i] = std::move(t.refined);
    regions[i] = t.outcomes.size();
    fallbacks[i] = t.fallbacks();
    calls[i] = t.backend_calls;
    logs[i] = t.log(tiles[i].tile_id);
  });

  RefineResult out;
  out.refined = stitch(prediction.frame(), tiles, masks, cfg.stitch);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    out.regions += regions[i];
    out.fallbacks += fallbacks[i];
    out.backend_calls += calls[i];
  }
  out.within_budget =
      static_cast<double>(out.fallbacks) <= cfg.fallback_budget * static_cast<double>(out.regions) + 1e-9;
  geomesh::write_mask(work_dir / kRefined, out.refined);
  write_regions(work_dir / kRefinedGeo, out.refined, epsg);
  const nlohmann::json log = {{"regions", out.regions},
                              {"fallbacks", out.fallbacks},
                              {"backend_calls", out.backend_calls},
                              {"fallback_budget", cfg.fallback_budget},
                              {"within_budget", out.within_budget},
                              {"tiles", logs}};
  geomesh::write_file(work_dir / kRefineLog, log.dump(2) + "\n");
  return out;
}

geomesh::PolygonSet read_regions(const fs::path& path) {
  if (path.extension() == ".grid") return geomesh::vectorize(geomesh::read_mask(path));
  return geomesh::read_geojson(path).polygons();
}

CityInput load_city(const fs::path& scene_dir, const fs::path& pred) {
  const auto m = read_json(scene_dir / synthcity::kManifest);
  CityInput c;
  c.city_id = m.value("city_id", scene_dir.filename().string());
  c.stratum = m.value("region", std::string("all"));
  c.truth = geomesh::read_geojson(scene_dir / synthcity::kTruth).polygons();
  c.extent = geomesh::read_geojson(scene_dir / synthcity::kGub).polygons();
  c.frame = geomesh::read_frame(scene_dir / synthcity::kTruthGrid);
  if (pred.extension() == ".grid" && !geomesh::read_frame(pred).same_geometry(c.frame))
    throw FrameMismatch(pred.string() + ": raster frame differs from the scene grid");
  c.predicted = read_regions(pred);
  return c;
}

std::vector<assess::HexCell> sampled_cells(const geomesh::PolygonSet& extent, const PipelineConfig& cfg) {
  auto cells = assess::hex_tessellate(extent, cfg.hex_circumradius_m);
  return assess::sampled_only(assess::sample_cells(std::move(cells), cfg.sample_fraction, cfg.sample_seed));
}

assess::AssessmentReport run_assess(const std::vector<CityInput>& cities, const PipelineConfig& cfg) {
  if (cities.empty()) throw ValidationError("assess: no cities given");
  std::vector<assess::CityEvaluation> evals;
  for (const auto& c : cities) {
    evals.push_back(assess::evaluate_city(c.city_id, c.stratum, c.predicted, c.truth, sampled_cells(c.extent, cfg),
                                          c.frame));
  }
  return assess::assess(evals, cfg.min_overlap_frac);
}

std::vector<assess::ProductRow> run_compare(const std::vector<NamedPath>& products, const CityInput& city,
                                            const PipelineConfig& cfg) {
  std::vector<assess::Product> ps;
  for (const auto& p : products) ps.push_back({p.name, read_regions(p.path), std::nullopt});
  const auto area = assess::footprint(sampled_cells(city.extent, cfg));
  return assess::compare_products(ps, city.truth, city.frame, &area, cfg.min_overlap_frac);
}

SampleRankResult run_sample_rank(const geomesh::Box& extent, const std::vector<std::int64_t>& anchors,
                                 gateway::Gateway& gw, const std::string& provider_id, const PipelineConfig& cfg,
                                 int jobs) {
  SampleRankResult out;
  out.grid = sampler::make_grid(extent, cfg.grid_size_m);
  for (auto id : anchors) {
    if (id < 0 || id >= static_cast<std::int64_t>(out.grid.cells.size()))
      throw ValidationError("anchor cell " + std::to_string(id) + " is outside the grid");
    out.grid.cells[static_cast<std::size_t>(id)].status = sampler::CellStatus::Anchor;
  }
  out.scores = sampler::score_cells(out.grid.cells, gw, provider_id, jobs);
  out.bands = sampler::rank_and_band(out.scores, cfg.bands());
  std::map<std::int64_t, std::string> band;
  for (const auto& s : out.bands.confusion) band[s.cell_id] = "confusion";
  for (const auto& s : out.bands.diversity) band[s.cell_id] = "diversity";
  out.ranking = {{"grid", {{"rows", out.grid.rows}, {"cols", out.grid.cols}, {"cell_size_m", out.grid.cell_size}}},
                 {"anchors", anchors},
                 {"ranked", nlohmann::json::array()}};
  for (const auto& s : out.bands.ranked) {
    out.ranking["ranked"].push_back({{"cell_id", s.cell_id},
                                     {"alpha_sim", s.alpha_sim},
                                     {"rank", s.rank},
                                     {"band", band.count(s.cell_id) ? band[s.cell_id] : "none"}});
  }
  return out;
}

std::int64_t pick_anchor(const synthcity::Scene& scene, const sampler::CityGrid& grid) {
  std::int64_t best = -1;
  std::size_t best_count = 0;
  const Frame& f = scene.frame;
  for (const auto& cell : grid.cells) {
    const int c0 = static_cast<int>(std::floor(f.col_of(cell.clipped.min_x) + 1e-9));
    const int c1 = static_cast<int>(std::ceil(f.col_of(cell.clipped.max_x) - 1e-9));
    const int r0 = static_cast<int>(std::floor(f.row_of(cell.clipped.max_y) + 1e-9));
    const int r1 = static_cast<int>(std::ceil(f.row_of(cell.clipped.min_y) - 1e-9));
    std::size_t n = 0;
    for (int r = r0; r < r1; ++r)
      for (int c = c0; c < c1; ++c) n += scene.truth.get(c, r);
    if (best < 0 || n > best_count) {
      best = cell.cell_id;
      best_count = n;
    }
  }
  if (best < 0) throw ValidationError("no grid cells to anchor");
  return best;
}

AnalyzeResult run_analyze(const std::vector<analytics::CityRecord>& cities,
                          const std::vector<std::vector<analytics::Building>>& buildings, double precision) {
  if (cities.empty()) throw ValidationError("analyze: no cities given");
  if (!buildings.empty() && buildings.size() != cities.size())
    throw ValidationError("analyze: building lists do not match the cities");
  AnalyzeResult out;
  for (std::size_t i = 0; i < cities.size(); ++i)
    out.rows.push_back(analytics::analyze_city(cities[i], buildings.empty() ? nullptr : &buildings[i], precision));
  analytics::classify(out.rows);
  out.csv = analytics::csv_header();
  for (const auto& r : out.rows) out.csv += analytics::csv_row(r);
  out.summary = analytics::summary_json(out.rows, cities);
  return out;
}

std::string file_digest(const fs::path& path) { return hex64(fnv1a64(geomesh::read_file(path))); }

void write_run_manifest(const fs::path& dir, const std::string& command, const PipelineConfig& cfg,
                        const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                        const nlohmann::json& extra) {
  auto digests = [](const std::vector<fs::path>& ps) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& p : ps)
      if (fs::is_regular_file(p)) j[p.string()] = file_digest(p);
    return j;
  };
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  const nlohmann::json m = {{"command", command},
                            {"config_hash", cfg.hash()},
                            {"config", cfg.to_json()},
                            {"seeds",
                             {{"sample_seed", cfg.sample_seed},
                              {"jitter_seed", cfg.jitter_seed},
                              {"synth_seed", cfg.synth_seed}}},
                            {"inputs", digests(inputs)},
                            {"outputs", digests(outputs)},
                            {"extra", extra},
                            {"created_at", stamp}};
  fs::create_directories(dir);
  geomesh::write_file(dir / ("run_" + command + ".json"), m.dump(2) + "\n");
}

}  // namespace uvkit::cli
