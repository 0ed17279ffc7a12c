#include "uvkit/gateway/messages.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "uvkit/error.hpp"
#include "uvkit/geomesh/io.hpp"

namespace uvkit::gateway {

void TileRequest::validate() const {
  if (tile_id.empty()) throw ValidationError("tile request: empty tile_id");
  if (tile_size != 256 && tile_size != 1024) {
    throw ValidationError("tile request '" + tile_id + "': tile_size must be 256 or 1024");
  }
  if (vector_context_present != vector_ref.has_value()) {
    throw ValidationError("tile request '" + tile_id + "': vector_ref must be present iff vector context is");
  }
  if (frame) {
    frame->validate();
    if (frame->width != tile_size || frame->height != tile_size) {
      throw ValidationError("tile request '" + tile_id + "': frame does not match tile_size");
    }
  }
}

const RefineCandidate& RefineResponse::best() const {
  if (candidates.empty()) throw ValidationError("refine response: no candidates");
  std::size_t k = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].confidence > candidates[k].confidence) k = i;
  }
  return candidates[k];
}

void validate(const SegmentationResponse& r, const TileRequest& req) {
  if (r.tile_id != req.tile_id) {
    throw ValidationError("segment response for '" + r.tile_id + "' does not answer '" + req.tile_id + "'");
  }
  if (r.backend_id.empty()) throw ValidationError("segment response: empty backend_id");
  r.probabilities.validate();
  const auto& f = r.probabilities.frame;
  if (req.frame) {
    if (!f.same_geometry(*req.frame)) throw ValidationError("segment response: grid frame does not match request");
  } else if (f.width != req.tile_size || f.height != req.tile_size) {
    throw ValidationError("segment response: grid size does not match tile_size");
  }
}

void validate(const RefineResponse& r, const RefineRequest& req) {
  if (r.tile_id != req.tile_id || r.region_id != req.region_id) {
    throw ValidationError("refine response does not match request '" + req.tile_id + "'/" +
                          std::to_string(req.region_id));
  }
  if (r.candidates.empty()) throw ValidationError("refine response: no candidates");
  for (const auto& c : r.candidates) {
    if (!std::isfinite(c.confidence) || c.confidence < 0.0 || c.confidence > 1.0) {
      throw ValidationError("refine response: confidence outside [0,1]");
    }
    if (!c.mask.frame().same_geometry(req.frame)) {
      throw ValidationError("refine response: candidate mask frame does not match tile");
    }
  }
}

void validate(const sampler::EmbeddingMatrix& m, std::size_t expected_cols) {
  m.validate();
  if (expected_cols != 0 && m.cols != expected_cols) {
    throw ValidationError("embedding: dimension " + std::to_string(m.cols) + " but provider declared " +
                          std::to_string(expected_cols));
  }
}

void write_embedding(const std::filesystem::path& path, const sampler::EmbeddingMatrix& m) {
  std::ostringstream out;
  out << "EMAT " << m.rows << ' ' << m.cols << '\n';
  std::string payload(m.values.size() * 8, '\0');
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(m.values[i]);
    for (int b = 0; b < 8; ++b) payload[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  geomesh::write_file(path, out.str() + payload);
}

sampler::EmbeddingMatrix read_embedding(const std::filesystem::path& path) {
  const std::string bytes = geomesh::read_file(path);
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw ValidationError("embedding: missing header in " + path.string());
  std::istringstream hs(bytes.substr(0, nl));
  std::string tag;
  sampler::EmbeddingMatrix m;
  if (!(hs >> tag >> m.rows >> m.cols) || tag != "EMAT") {
    throw ValidationError("embedding: malformed header in " + path.string());
  }
  const std::size_t n = m.rows * m.cols;
  if (bytes.size() - nl - 1 != n * 8) throw ValidationError("embedding: truncated payload in " + path.string());
  m.values.resize(n);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[i * 8 + b]) << (8 * b);
    m.values[i] = std::bit_cast<double>(bits);
  }
  return m;
}

nlohmann::json frame_to_json(const Frame& f) {
  return {{"width", f.width}, {"height", f.height}, {"origin_x", f.origin.x}, {"origin_y", f.origin.y},
          {"resolution", f.resolution}};
}

Frame frame_from_json(const nlohmann::json& j) {
  try {
    Frame f{j.at("width").get<int>(), j.at("height").get<int>(),
            {j.at("origin_x").get<double>(), j.at("origin_y").get<double>()}, j.at("resolution").get<double>()};
    f.validate();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed frame: ") + e.what());
  }
}

nlohmann::json encode_segment(const TileRequest& req) {
  nlohmann::json j{{"op", "segment"},
                   {"tile_id", req.tile_id},
                   {"image_ref", req.image_ref},
                   {"tile_size", req.tile_size},
                   {"vector_ref", req.vector_ref ? nlohmann::json(*req.vector_ref) : nlohmann::json(nullptr)}};
  if (req.frame) j["frame"] = frame_to_json(*req.frame);
  return j;
}

nlohmann::json encode_refine(const RefineRequest& req, const std::optional<std::string>& mask_ref) {
  nlohmann::json prompts = nlohmann::json::array();
  for (const auto& p : req.prompts) {
    prompts.push_back({{"x", p.position.x}, {"y", p.position.y}, {"label", p.positive() ? 1 : 0}});
  }
  return {{"op", "refine"},
          {"tile_id", req.tile_id},
          {"region_id", req.region_id},
          {"frame", frame_to_json(req.frame)},
          {"prompts", prompts},
          {"mask_ref", mask_ref ? nlohmann::json(*mask_ref) : nlohmann::json(nullptr)}};
}

nlohmann::json encode_embed(const sampler::GridCell& cell) {
  return {{"op", "embed"},
          {"tile_id", "cell-" + std::to_string(cell.cell_id)},
          {"cell_id", cell.cell_id},
          {"bounds", {cell.bounds.min_x, cell.bounds.min_y, cell.bounds.max_x, cell.bounds.max_y}}};
}

}  // namespace uvkit::gateway
