#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "uvkit/gateway/gateway.hpp"
#include "uvkit/lossmath.hpp"
#include "uvkit/promptgen/promptgen.hpp"
#include "uvkit/sampler/sampler.hpp"

namespace uvkit::cli {

// Every tunable of a pipeline run. Serialized as one flat JSON object whose
// keys are the member names.
struct PipelineConfig {
  // Sampling and tiling.
  double grid_size_m = 512.0;
  int train_tile_px = 256;
  int refine_tile_px = 1024;
  int tile_stride_px = 0;           // 0: equal to the tile size
  std::string stitch = "union";     // "union" or "majority" where tiles overlap
  double probability_threshold = 0.5;
  double band_top = 0.05;  // confusion candidates: ranks 1..ceil(band_top n)
  double band_low = 0.10;  // diversity samples: ranks (ceil(band_low n), ceil(band_high n)]
  double band_high = 0.30;

  // Prompt generation and refinement.
  int open_radius_px = 3;
  std::int64_t min_area_px = 1000;
  int rdp_max_vertices = 12;
  std::string offset_rule = "auto";  // "auto": max(3 px, 0.1 clearance); "fixed": offset_m
  double offset_m = 0.0;
  double confidence_floor = 0.6;
  double iou_floor = 0.7;
  double fallback_budget = 0.1;  // tolerated share of regions that fall back

  // Assessment.
  double hex_circumradius_m = 500.0;
  double sample_fraction = 0.15;
  double min_overlap_frac = 0.0;

  // Loss.
  double loss_mu = 1e-7;
  double loss_epsilon = 0.01;

  // Backends: "oracle", "env" (UVKIT_BACKEND_URI), "exec:<cmd>" or an
  // http:// URL. The refiner also accepts "none".
  std::string segmentation_backend = "oracle";
  std::string refiner_backend = "oracle";
  std::string embedding_backend = "oracle";
  int embedding_dim = 32;  // declared dimension of remote embedders
  double timeout_s = 60.0;
  int retries = 2;
  double backoff_base_s = 0.5;
  double jitter_frac = 0.25;
  int max_in_flight = 4;

  // Seeds.
  std::uint64_t sample_seed = 0;
  std::uint64_t jitter_seed = 0;
  std::uint64_t synth_seed = 7;

  // Throws ConfigError naming the first offending key.
  void validate() const;

  nlohmann::json to_json() const;
  // Keys absent from `j` keep their defaults. Throws ConfigError for unknown
  // keys and wrongly typed values.
  static PipelineConfig from_json(const nlohmann::json& j);
  // Applies one "key=value" override; the value is parsed as JSON when it
  // can be, otherwise taken as a string.
  void set(const std::string& assignment);

  // Hex digest of the canonical JSON form.
  std::string hash() const;

  gateway::GatewayConfig gateway() const;
  promptgen::PromptConfig prompts() const;
  sampler::BandSpec bands() const;
  lossmath::LossConfig loss() const;
};

// Reads and validates a config file. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);

// The defaults as printed by `--print-defaults`.
std::string defaults_text();

}  // namespace uvkit::cli
