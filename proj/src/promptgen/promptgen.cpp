#include "uvkit/promptgen/promptgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "uvkit/error.hpp"
#include "uvkit/gateway/gateway.hpp"
#include "uvkit/geomesh/contour.hpp"
#include "uvkit/geomesh/morphology.hpp"
#include "uvkit/geomesh/pole.hpp"
#include "uvkit/geomesh/simplify.hpp"

namespace uvkit::promptgen {

using geomesh::PixelSide;
using geomesh::Point;

void PromptConfig::validate() const {
  if (open_radius_px < 1) throw ConfigError("open_radius_px must be >= 1");
  if (min_area_px < 0) throw ConfigError("min_area_px must be >= 0");
  if (max_vertices < 3) throw ConfigError("rdp_max_vertices must be >= 3");
  if (offset_m && !(*offset_m > 0.0)) throw ConfigError("offset must be positive");
  if (!(confidence_floor >= 0.0 && confidence_floor <= 1.0)) throw ConfigError("confidence_floor must be in [0,1]");
  if (!(iou_floor >= 0.0 && iou_floor <= 1.0)) throw ConfigError("iou_floor must be in [0,1]");
  if (tile_px < 1) throw ConfigError("refine_tile_px must be positive");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
}

std::size_t PromptSet::positives() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.positive(); }));
}

LabeledComponents preprocess(const BinaryMask& initial, int open_radius_px, std::int64_t min_area_px) {
  return geomesh::connected_components(
      geomesh::drop_small_components(geomesh::morphological_open(initial, open_radius_px), min_area_px));
}

namespace {

bool strictly_in_frame(const geomesh::Frame& f, Point p) {
  const auto b = f.bounds();
  return p.x > b.min_x && p.x < b.max_x && p.y > b.min_y && p.y < b.max_y;
}

// Foreground pixel center closest to p.
Point nearest_foreground(const BinaryMask& region, Point p) {
  const auto& f = region.frame();
  double best = std::numeric_limits<double>::infinity();
  Point out = p;
  for (int r = 0; r < f.height; ++r) {
    for (int c = 0; c < f.width; ++c) {
      if (!region.at(c, r)) continue;
      const Point q = f.pixel_center(c, r);
      const double d = std::hypot(q.x - p.x, q.y - p.y);
      if (d < best) {
        best = d;
        out = q;
      }
    }
  }
  return out;
}

Point unit(Point v) {
  const double n = std::hypot(v.x, v.y);
  return n > 0.0 ? Point{v.x / n, v.y / n} : Point{0.0, 0.0};
}

Point left_normal(Point a, Point b) { return unit({-(b.y - a.y), b.x - a.x}); }

}  // namespace

PromptSet generate_prompts(const BinaryMask& region, int region_id, const BinaryMask* all_regions, int max_vertices,
                           std::optional<double> offset_m) {
  if (region.empty()) throw ValidationError("generate_prompts: region " + std::to_string(region_id) + " is empty");
  if (max_vertices < 3) throw ValidationError("generate_prompts: max_vertices must be >= 3");
  const BinaryMask& avoid = all_regions ? *all_regions : region;
  const auto& f = region.frame();
  const double res = f.resolution;

  auto polys = geomesh::vectorize(region);
  const auto& poly = *std::max_element(polys.begin(), polys.end(),
                                       [](const auto& a, const auto& b) { return a.area() < b.area(); });

  const geomesh::Pole pole = geomesh::pole_of_inaccessibility(poly, res);
  Point anchor = poly.centroid();
  if (geomesh::classify_point(region, anchor) != PixelSide::Inside) {
    anchor = pole.point;
    if (geomesh::classify_point(region, anchor) != PixelSide::Inside) anchor = nearest_foreground(region, anchor);
  }

  PromptSet set;
  set.region_id = region_id;
  set.points.push_back({anchor, PromptLabel::Positive});

  const double offset = offset_m ? *offset_m : std::max(3.0 * res, 0.1 * pole.clearance);
  geomesh::Ring ring = poly.exterior();
  for (double eps = res; ring.size() > static_cast<std::size_t>(max_vertices); eps *= 2.0) {
    ring = geomesh::simplify_ring(poly.exterior(), eps);
  }

  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point prev = ring[(i + n - 1) % n];
    const Point v = ring[i];
    const Point next = ring[(i + 1) % n];
    // Exterior rings run counter-clockwise, so left normals face inward.
    Point dir = unit(left_normal(prev, v) + left_normal(v, next));
    if (dir.x == 0.0 && dir.y == 0.0) dir = left_normal(v, next);
    const Point in = v + dir * offset;
    const Point out = v - dir * offset;
    if (strictly_in_frame(f, in) && geomesh::classify_point(region, in) == PixelSide::Inside) {
      set.points.push_back({in, PromptLabel::Positive});
    }
    if (strictly_in_frame(f, out) && geomesh::classify_point(avoid, out) == PixelSide::Outside) {
      set.points.push_back({out, PromptLabel::Negative});
    }
  }
  return set;
}

bool decide_mask_prompt(double confidence, double iou_vs_initial, double confidence_floor, double iou_floor) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(confidence) || !in_unit(iou_vs_initial)) {
    throw ValidationError("decide_mask_prompt: confidence and IoU must lie in [0,1]");
  }
  return confidence < confidence_floor || iou_vs_initial < iou_floor;
}

std::size_t TileRefinement::fallbacks() const {
  return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.fallback; }));
}

nlohmann::json TileRefinement::log(const std::string& tile_id) const {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& o : outcomes) {
    nlohmann::json r{{"region_id", o.region_id},
                     {"confidence", o.confidence},
                     {"iou_vs_initial", o.iou_vs_initial},
                     {"used_mask_prompt", o.used_mask_prompt},
                     {"fallback", o.fallback}};
    if (!o.warning.empty()) r["warning"] = o.warning;
    regions.push_back(std::move(r));
  }
  return {{"tile_id", tile_id}, {"backend_calls", backend_calls}, {"regions", regions}};
}

TileRefinement refine_tile(const BinaryMask& initial, gateway::Gateway& gw, const std::string& tile_id,
                           const PromptConfig& cfg) {
  cfg.validate();
  const auto& frame = initial.frame();
  if (frame.width != cfg.tile_px || frame.height != cfg.tile_px) {
    throw ValidationError("refine_tile: tile '" + tile_id + "' is " + std::to_string(frame.width) + "x" +
                          std::to_string(frame.height) + ", expected " + std::to_string(cfg.tile_px) + " px square");
  }

  TileRefinement out;
  out.regions = preprocess(initial, cfg.open_radius_px, cfg.min_area_px);
  out.refined = BinaryMask(frame);
  const int n = out.regions.count;
  if (n == 0) return out;

  const BinaryMask all = out.regions.foreground();
  out.outcomes.resize(static_cast<std::size_t>(n));
  std::vector<std::size_t> calls(static_cast<std::size_t>(n), 0);

  auto call = [&](const gateway::RefineRequest& req, std::size_t& counter) {
    ++counter;
    return cfg.refiner_id.empty() ? gw.refine(req) : gw.refine(req, cfg.refiner_id);
  };

  auto process = [&](int label) {
    const auto k = static_cast<std::size_t>(label - 1);
    RefinementOutcome& o = out.outcomes[k];
    o.region_id = label;
    const BinaryMask region = out.regions.component_mask(label);
    try {
      PromptSet prompts = generate_prompts(region, label, &all, cfg.max_vertices, cfg.offset_m);
      prompts.source_mask_iou_floor = cfg.iou_floor;
      prompts.confidence_floor = cfg.confidence_floor;
      gateway::RefineRequest req{tile_id, label, frame, prompts.points, std::nullopt};
      auto best = call(req, calls[k]).best();
      double iou = geomesh::mask_iou(best.mask, region);
      if (decide_mask_prompt(best.confidence, iou, cfg.confidence_floor, cfg.iou_floor)) {
        req.mask_prompt = region;
        best = call(req, calls[k]).best();
        iou = geomesh::mask_iou(best.mask, region);
        o.used_mask_prompt = true;
      }
      o.refined_mask = std::move(best.mask);
      o.confidence = best.confidence;
      o.iou_vs_initial = iou;
    } catch (const Error& e) {
      o.refined_mask = region;
      o.confidence = 0.0;
      o.iou_vs_initial = 1.0;
      o.fallback = true;
      o.warning = e.what();
    }
  };

  std::mutex mu;
  int next = 1;
  auto worker = [&] {
    for (;;) {
      int label;
      {
        std::lock_guard lk(mu);
        if (next > n) return;
        label = next++;
      }
      process(label);
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < std::min(cfg.max_in_flight, n); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t k = 0; k < out.outcomes.size(); ++k) {
    out.refined |= out.outcomes[k].refined_mask;
    out.backend_calls += calls[k];
  }
  return out;
}

}  // namespace uvkit::promptgen
