#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvkit/gateway/messages.hpp"
#include "uvkit/geomesh/mask.hpp"

namespace uvkit::gateway {
class Gateway;
}

namespace uvkit::promptgen {

using gateway::PromptLabel;
using gateway::PromptPoint;
using geomesh::BinaryMask;
using geomesh::LabeledComponents;

struct PromptConfig {
  int open_radius_px = 3;
  std::int64_t min_area_px = 1000;
  int max_vertices = 12;
  std::optional<double> offset_m;  // unset: max(3 px, 0.1 * pole clearance)
  double confidence_floor = 0.6;
  double iou_floor = 0.7;
  int tile_px = 1024;
  int max_in_flight = 4;
  std::string refiner_id;  // empty: the gateway's only refiner

  // Throws ConfigError for out-of-range values.
  void validate() const;
};

struct PromptSet {
  int region_id = 0;
  std::vector<PromptPoint> points;  // points[0] is the positive anchor
  std::optional<BinaryMask> mask_prompt;
  double source_mask_iou_floor = 0.7;
  double confidence_floor = 0.6;

  std::size_t positives() const;
  std::size_t negatives() const { return points.size() - positives(); }
};

struct RefinementOutcome {
  int region_id = 0;
  BinaryMask refined_mask;
  double confidence = 0.0;
  bool used_mask_prompt = false;
  double iou_vs_initial = 0.0;  // recomputed here, never taken from the backend
  bool fallback = false;
  std::string warning;
};

// Opening, then small-fragment removal, then 4-connected labeling.
LabeledComponents preprocess(const BinaryMask& initial, int open_radius_px, std::int64_t min_area_px);

// Point prompts for one region. `all_regions` is the union every negative
// point must avoid; it defaults to the region itself. Throws ValidationError
// for an empty region.
PromptSet generate_prompts(const BinaryMask& region, int region_id, const BinaryMask* all_regions = nullptr,
                           int max_vertices = 12, std::optional<double> offset_m = std::nullopt);

// True iff confidence < confidence_floor or iou < iou_floor. Throws
// ValidationError for inputs outside [0,1].
bool decide_mask_prompt(double confidence, double iou_vs_initial, double confidence_floor = 0.6,
                        double iou_floor = 0.7);

struct TileRefinement {
  BinaryMask refined;
  LabeledComponents regions;
  std::vector<RefinementOutcome> outcomes;  // in region order
  std::size_t backend_calls = 0;

  std::size_t fallbacks() const;
  nlohmann::json log(const std::string& tile_id) const;
};

// Refines every region of one tile through the gateway's refiner and merges
// the results by union. Failed regions keep their preprocessed mask. Throws
// ValidationError unless the mask is tile_px x tile_px.
TileRefinement refine_tile(const BinaryMask& initial, gateway::Gateway& gw, const std::string& tile_id,
                           const PromptConfig& cfg = {});

}  // namespace uvkit::promptgen
