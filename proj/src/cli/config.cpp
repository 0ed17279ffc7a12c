#include "uvkit/cli/config.hpp"

#include <cmath>

#include "uvkit/error.hpp"
#include "uvkit/geomesh/io.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::cli {

namespace {

// Visits every serialized member; keeps to_json, from_json and set in step.
template <class Config, class F>
void visit(Config& c, F&& f) {
  f("grid_size_m", c.grid_size_m);
  f("train_tile_px", c.train_tile_px);
  f("refine_tile_px", c.refine_tile_px);
  f("tile_stride_px", c.tile_stride_px);
  f("stitch", c.stitch);
  f("probability_threshold", c.probability_threshold);
  f("band_top", c.band_top);
  f("band_low", c.band_low);
  f("band_high", c.band_high);
  f("open_radius_px", c.open_radius_px);
  f("min_area_px", c.min_area_px);
  f("rdp_max_vertices", c.rdp_max_vertices);
  f("offset_rule", c.offset_rule);
  f("offset_m", c.offset_m);
  f("confidence_floor", c.confidence_floor);
  f("iou_floor", c.iou_floor);
  f("fallback_budget", c.fallback_budget);
  f("hex_circumradius_m", c.hex_circumradius_m);
  f("sample_fraction", c.sample_fraction);
  f("min_overlap_frac", c.min_overlap_frac);
  f("loss_mu", c.loss_mu);
  f("loss_epsilon", c.loss_epsilon);
  f("segmentation_backend", c.segmentation_backend);
  f("refiner_backend", c.refiner_backend);
  f("embedding_backend", c.embedding_backend);
  f("embedding_dim", c.embedding_dim);
  f("timeout_s", c.timeout_s);
  f("retries", c.retries);
  f("backoff_base_s", c.backoff_base_s);
  f("jitter_frac", c.jitter_frac);
  f("max_in_flight", c.max_in_flight);
  f("sample_seed", c.sample_seed);
  f("jitter_seed", c.jitter_seed);
  f("synth_seed", c.synth_seed);
}

template <class T>
void assign(const std::string& key, const nlohmann::json& v, T& out) {
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
    out = v.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
    out = v.get<T>();
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) throw ConfigError("config key '" + key + "' must be a non-negative integer");
    out = v.get<T>();
  } else {
    if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
    out = v.get<T>();
  }
}

bool valid_backend(const std::string& b, bool allow_none) {
  return b == "oracle" || b == "env" || b.rfind("exec:", 0) == 0 || b.rfind("http://", 0) == 0 ||
         (allow_none && b == "none");
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "' " + why);
  };
  if (!(grid_size_m > 0)) fail("grid_size_m", "must be positive");
  if (train_tile_px != 256 && train_tile_px != 1024) fail("train_tile_px", "must be 256 or 1024");
  if (refine_tile_px != 256 && refine_tile_px != 1024) fail("refine_tile_px", "must be 256 or 1024");
  if (tile_stride_px < 0) fail("tile_stride_px", "must be non-negative");
  if (tile_stride_px > std::min(train_tile_px, refine_tile_px)) fail("tile_stride_px", "must not exceed a tile");
  if (stitch != "union" && stitch != "majority") fail("stitch", "must be \"union\" or \"majority\"");
  if (!(probability_threshold > 0 && probability_threshold < 1)) fail("probability_threshold", "must be in (0,1)");
  if (!(band_top > 0 && band_top < band_low)) fail("band_top", "must be in (0, band_low)");
  if (!(band_low < band_high && band_high <= 1)) fail("band_high", "must be in (band_low, 1]");
  if (open_radius_px < 0) fail("open_radius_px", "must be non-negative");
  if (min_area_px < 0) fail("min_area_px", "must be non-negative");
  if (rdp_max_vertices < 3) fail("rdp_max_vertices", "must be at least 3");
  if (offset_rule != "auto" && offset_rule != "fixed") fail("offset_rule", "must be \"auto\" or \"fixed\"");
  if (offset_rule == "fixed" && !(offset_m > 0)) fail("offset_m", "must be positive with a fixed offset rule");
  if (!(confidence_floor >= 0 && confidence_floor <= 1)) fail("confidence_floor", "must be in [0,1]");
  if (!(iou_floor >= 0 && iou_floor <= 1)) fail("iou_floor", "must be in [0,1]");
  if (!(fallback_budget >= 0 && fallback_budget <= 1)) fail("fallback_budget", "must be in [0,1]");
  if (!(hex_circumradius_m > 0)) fail("hex_circumradius_m", "must be positive");
  if (!(sample_fraction > 0 && sample_fraction <= 1)) fail("sample_fraction", "must be in (0,1]");
  if (!(min_overlap_frac >= 0 && min_overlap_frac < 1)) fail("min_overlap_frac", "must be in [0,1)");
  if (!(loss_mu > 0)) fail("loss_mu", "must be positive");
  if (!(loss_epsilon >= 0)) fail("loss_epsilon", "must be non-negative");
  if (!valid_backend(segmentation_backend, false)) fail("segmentation_backend", "is not a known backend");
  if (!valid_backend(refiner_backend, true)) fail("refiner_backend", "is not a known backend");
  if (!valid_backend(embedding_backend, false)) fail("embedding_backend", "is not a known backend");
  if (embedding_dim <= 0) fail("embedding_dim", "must be positive");
  if (!(timeout_s > 0)) fail("timeout_s", "must be positive");
  if (retries < 0) fail("retries", "must be non-negative");
  if (!(backoff_base_s >= 0)) fail("backoff_base_s", "must be non-negative");
  if (!(jitter_frac >= 0)) fail("jitter_frac", "must be non-negative");
  if (max_in_flight < 1) fail("max_in_flight", "must be at least 1");
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  visit(*this, [&](const char* k, const auto& v) { j[k] = v; });
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  const nlohmann::json known = c.to_json();
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  visit(c, [&](const char* k, auto& v) {
    if (j.contains(k)) assign(k, j.at(k), v);
  });
  return c;
}

void PipelineConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  bool found = false;
  visit(*this, [&](const char* k, auto& v) {
    if (key == k) {
      // A number given for a string key stays a string.
      if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::string>) {
        if (!value.is_string()) value = text;
      }
      assign(key, value, v);
      found = true;
    }
  });
  if (!found) throw ConfigError("unknown config key '" + key + "'");
}

std::string PipelineConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

gateway::GatewayConfig PipelineConfig::gateway() const {
  gateway::GatewayConfig g;
  g.timeout_s = timeout_s;
  g.retries = retries;
  g.backoff_base_s = backoff_base_s;
  g.jitter_frac = jitter_frac;
  g.jitter_seed = jitter_seed;
  g.max_in_flight = max_in_flight;
  return g;
}

promptgen::PromptConfig PipelineConfig::prompts() const {
  promptgen::PromptConfig p;
  p.open_radius_px = open_radius_px;
  p.min_area_px = min_area_px;
  p.max_vertices = rdp_max_vertices;
  if (offset_rule == "fixed") p.offset_m = offset_m;
  p.confidence_floor = confidence_floor;
  p.iou_floor = iou_floor;
  p.tile_px = refine_tile_px;
  p.max_in_flight = max_in_flight;
  return p;
}

sampler::BandSpec PipelineConfig::bands() const { return {band_top, band_low, band_high}; }

lossmath::LossConfig PipelineConfig::loss() const {
  lossmath::LossConfig l;
  l.mu = loss_mu;
  l.epsilon = loss_epsilon;
  return l;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = geomesh::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  PipelineConfig c = PipelineConfig::from_json(j);
  c.validate();
  return c;
}

std::string defaults_text() { return PipelineConfig{}.to_json().dump(2) + "\n"; }

}  // namespace uvkit::cli
