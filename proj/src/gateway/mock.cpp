#include "uvkit/gateway/mock.hpp"

#include <cmath>

#include "uvkit/error.hpp"
#include "uvkit/geomesh/io.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::gateway {

namespace {

Frame request_frame(const TileRequest& req) {
  if (req.frame) return *req.frame;
  try {
    return geomesh::read_frame(req.image_ref);
  } catch (const ValidationError& e) {
    throw TransportError(req.tile_id, e.what());
  }
}

std::int64_t mm(double v) { return std::llround(v * 1000.0); }

}  // namespace

ConstantBackend::ConstantBackend(float value, std::string backend_id) : value_(value), id_(std::move(backend_id)) {}

SegmentationResponse ConstantBackend::segment(const TileRequest& req) {
  const Frame f = request_frame(req);
  return {req.tile_id, ProbabilityGrid{f, std::vector<float>(f.size(), value_)}, id_};
}

FileBackend::FileBackend(std::filesystem::path dir, std::string backend_id)
    : dir_(std::move(dir)), id_(std::move(backend_id)) {}

SegmentationResponse FileBackend::segment(const TileRequest& req) {
  std::filesystem::path p = dir_ / (req.tile_id + ".pgrid");
  if (!std::filesystem::exists(p) && std::filesystem::path(req.image_ref).extension() == ".pgrid") p = req.image_ref;
  try {
    return {req.tile_id, geomesh::read_probabilities(p), id_};
  } catch (const ValidationError& e) {
    throw TransportError(req.tile_id, e.what());
  }
}

ScriptedBackend::ScriptedBackend(std::shared_ptr<SegmentationBackend> inner, std::vector<bool> script)
    : inner_(std::move(inner)), script_(std::move(script)) {}

SegmentationResponse ScriptedBackend::segment(const TileRequest& req) {
  const std::size_t k = calls_.fetch_add(1);
  if (k < script_.size() && script_[k]) throw TransportError(req.tile_id, "scripted failure #" + std::to_string(k));
  return inner_->segment(req);
}

FixedEmbeddingProvider::FixedEmbeddingProvider(sampler::EmbeddingMatrix m) : m_(std::move(m)) { m_.validate(); }

sampler::EmbeddingMatrix FixedEmbeddingProvider::embed(const sampler::GridCell&) { return m_; }

GeometryHashProvider::GeometryHashProvider(std::size_t rows, std::size_t cols, std::uint64_t seed)
    : rows_(rows), cols_(cols), seed_(seed) {
  if (rows == 0 || cols == 0) throw ValidationError("geometry-hash provider: empty shape");
}

sampler::EmbeddingMatrix GeometryHashProvider::embed(const sampler::GridCell& cell) {
  std::uint64_t key = seed_;
  for (double v : {cell.bounds.min_x, cell.bounds.min_y, cell.bounds.max_x, cell.bounds.max_y}) {
    key = hash_combine(key, static_cast<std::uint64_t>(mm(v)));
  }
  CounterRng rng(key);
  sampler::EmbeddingMatrix m{rows_, cols_, std::vector<double>(rows_ * cols_)};
  for (double& v : m.values) v = rng.uniform(-1.0, 1.0);
  return m;
}

IdentityRefiner::IdentityRefiner(double confidence, std::string id) : confidence_(confidence), id_(std::move(id)) {}

RefineResponse IdentityRefiner::refine(const RefineRequest& req) {
  BinaryMask m = req.mask_prompt ? *req.mask_prompt : BinaryMask(req.frame);
  return {req.tile_id, req.region_id, {{std::move(m), confidence_}}, id_};
}

RefineResponse FailingRefiner::refine(const RefineRequest& req) {
  throw TransportError(req.tile_id, "refiner unavailable");
}

nlohmann::json handle_mock_message(const nlohmann::json& msg, const MockServerOptions& opt) {
  const std::string op = msg.value("op", "");
  const std::string tile = msg.value("tile_id", "");
  if (op == "segment") {
    Frame f;
    if (msg.contains("frame")) {
      f = frame_from_json(msg["frame"]);
    } else {
      f = geomesh::read_frame(msg.at("image_ref").get<std::string>());
    }
    const auto path = opt.workdir / ("seg-" + tile + ".pgrid");
    geomesh::write_probabilities(path, ProbabilityGrid{f, std::vector<float>(f.size(), opt.segment_value)});
    return {{"tile_id", tile}, {"grid_ref", path.string()}, {"confidence", 1.0}, {"backend_id", "mock"}};
  }
  if (op == "refine") {
    const Frame f = frame_from_json(msg.at("frame"));
    BinaryMask m(f);
    if (msg.contains("mask_ref") && msg["mask_ref"].is_string()) m = geomesh::read_mask(msg["mask_ref"].get<std::string>());
    const int region = msg.value("region_id", 0);
    const auto path = opt.workdir / ("ref-" + tile + "-" + std::to_string(region) + ".grid");
    geomesh::write_mask(path, m);
    return {{"tile_id", tile},
            {"region_id", region},
            {"grid_ref", path.string()},
            {"confidence", opt.refine_confidence},
            {"backend_id", "identity"}};
  }
  if (op == "embed") {
    sampler::GridCell cell;
    cell.cell_id = msg.value("cell_id", std::int64_t{0});
    const auto& b = msg.at("bounds");
    cell.bounds = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
    GeometryHashProvider provider(opt.embed_rows, opt.embed_cols, opt.seed);
    const auto path = opt.workdir / ("emb-" + std::to_string(cell.cell_id) + ".emat");
    write_embedding(path, provider.embed(cell));
    return {{"tile_id", tile}, {"grid_ref", path.string()}, {"backend_id", "geometry-hash"}};
  }
  return {{"tile_id", tile}, {"error", "unknown op '" + op + "'"}};
}

}  // namespace uvkit::gateway
