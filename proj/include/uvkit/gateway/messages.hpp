#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvkit/geomesh/mask.hpp"
#include "uvkit/sampler/types.hpp"

namespace uvkit::gateway {

using geomesh::BinaryMask;
using geomesh::Frame;
using geomesh::Point;
using geomesh::ProbabilityGrid;

// Backend identifiers used by routing and recorded on responses.
inline constexpr const char* kMultimodal = "multimodal";
inline constexpr const char* kRsOnly = "rs-only";

struct TileRequest {
  std::string tile_id;
  std::string image_ref;  // raster tile path or URL
  int tile_size = 256;    // 256 or 1024 pixels
  bool vector_context_present = false;
  std::optional<std::string> vector_ref;  // GeoJSON context, present iff the flag is set
  std::optional<Frame> frame;             // georeference; read from image_ref when absent

  // Throws ValidationError when an invariant is broken.
  void validate() const;
};

struct SegmentationResponse {
  std::string tile_id;
  ProbabilityGrid probabilities;
  std::string backend_id;
};

enum class PromptLabel { Negative = 0, Positive = 1 };

struct PromptPoint {
  Point position;
  PromptLabel label = PromptLabel::Positive;

  bool positive() const { return label == PromptLabel::Positive; }
};

struct RefineRequest {
  std::string tile_id;
  int region_id = 0;
  Frame frame;
  std::vector<PromptPoint> prompts;
  std::optional<BinaryMask> mask_prompt;
};

struct RefineCandidate {
  BinaryMask mask;
  double confidence = 0.0;
};

struct RefineResponse {
  std::string tile_id;
  int region_id = 0;
  std::vector<RefineCandidate> candidates;
  std::string backend_id;

  // Maximum confidence, first on ties. Requires at least one candidate.
  const RefineCandidate& best() const;
};

// Shape/range checks applied to everything crossing the gateway.
void validate(const SegmentationResponse& r, const TileRequest& req);
void validate(const RefineResponse& r, const RefineRequest& req);
void validate(const sampler::EmbeddingMatrix& m, std::size_t expected_cols);

// Embedding exchange file: "EMAT <rows> <cols>\n" then rows*cols little-endian float64.
void write_embedding(const std::filesystem::path& path, const sampler::EmbeddingMatrix& m);
sampler::EmbeddingMatrix read_embedding(const std::filesystem::path& path);

// Line-delimited JSON wire messages.
nlohmann::json encode_segment(const TileRequest& req);
nlohmann::json encode_refine(const RefineRequest& req, const std::optional<std::string>& mask_ref);
nlohmann::json encode_embed(const sampler::GridCell& cell);
nlohmann::json frame_to_json(const Frame& f);
Frame frame_from_json(const nlohmann::json& j);

}  // namespace uvkit::gateway
