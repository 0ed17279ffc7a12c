#include "uvkit/synthcity/synthcity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uvkit/error.hpp"
#include "uvkit/geomesh.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::synthcity {

namespace {

using geomesh::Box;
using geomesh::Frame;
using geomesh::Ring;

constexpr int kVertices = 64;
constexpr double kShapeAmplitude = 0.15;
// Packing leaves room for radial noise up to this fraction without contact.
constexpr double kNoiseRoom = 0.3;

std::uint64_t stream(std::uint64_t seed, const char* tag, std::uint64_t index) {
  return hash_combine(hash_combine(seed, fnv1a64(tag)), index);
}

// Low-frequency periodic profile in [-1, 1].
struct Profile {
  double weight[3];
  double phase[3];

  static Profile draw(CounterRng& rng) {
    Profile p{};
    for (int k = 0; k < 3; ++k) {
      p.weight[k] = rng.uniform(0.5, 1.0);
      p.phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return p;
  }
  double at(double theta) const {
    static constexpr int freq[3] = {2, 3, 5};
    double s = 0.0, w = 0.0;
    for (int k = 0; k < 3; ++k) {
      s += weight[k] * std::sin(freq[k] * theta + phase[k]);
      w += weight[k];
    }
    return s / w;
  }
};

struct StarShape {
  Point center;
  std::vector<double> radii;  // at angles 2*pi*i/kVertices

  RegionPolygon polygon() const {
    Ring ring;
    ring.reserve(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(radii.size());
      const double r = radii[i];
      ring.push_back({center.x + r * std::cos(t), center.y + r * std::sin(t)});
    }
    return RegionPolygon(std::move(ring));
  }
};

StarShape uv_shape(const SceneSpec& spec, int k, Point center) {
  CounterRng rng(stream(spec.seed, "uv-shape", static_cast<std::uint64_t>(k)));
  const double target = rng.uniform(spec.uv_area_min_m2, spec.uv_area_max_m2);
  const Profile prof = Profile::draw(rng);
  StarShape s{center, {}};
  for (int i = 0; i < kVertices; ++i) {
    const double t = 2.0 * std::numbers::pi * i / kVertices;
    s.radii.push_back(1.0 + kShapeAmplitude * prof.at(t));
  }
  const double unit_area = s.polygon().area();
  const double scale = std::sqrt(target / unit_area);
  for (double& r : s.radii) r *= scale;
  return s;
}

double uv_pack_radius(const SceneSpec& spec, int k) {
  CounterRng rng(stream(spec.seed, "uv-shape", static_cast<std::uint64_t>(k)));
  const double target = rng.uniform(spec.uv_area_min_m2, spec.uv_area_max_m2);
  return std::sqrt(target / std::numbers::pi) * (1.0 + kShapeAmplitude) * 1.02 * (1.0 + kNoiseRoom);
}

struct Confuser {
  double w, h, angle;
  double pack_radius() const { return 0.5 * std::hypot(w, h); }
};

Confuser confuser_shape(const SceneSpec& spec, int k) {
  CounterRng rng(stream(spec.seed, "confuser-shape", static_cast<std::uint64_t>(k)));
  const double side = std::sqrt(0.5 * (spec.uv_area_min_m2 + spec.uv_area_max_m2));
  return {side * rng.uniform(0.8, 1.3), side * rng.uniform(0.8, 1.3), rng.uniform(0.0, std::numbers::pi / 2)};
}

RegionPolygon rotated_rect(Point c, double w, double h, double angle) {
  const double ca = std::cos(angle), sa = std::sin(angle);
  Ring ring;
  for (auto [u, v] : {std::pair{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}) {
    const double x = u * w, y = v * h;
    ring.push_back({c.x + x * ca - y * sa, c.y + x * sa + y * ca});
  }
  return RegionPolygon(std::move(ring));
}

struct Placed {
  Point center;
  double radius;
};

Point place(const SceneSpec& spec, const char* tag, int k, double radius, const std::vector<Placed>& taken) {
  CounterRng rng(stream(spec.seed, tag, static_cast<std::uint64_t>(k)));
  const double margin = radius + 2.0;
  if (2.0 * margin < spec.width_m && 2.0 * margin < spec.height_m) {
    for (int attempt = 0; attempt < 20000; ++attempt) {
      const Point c{spec.origin.x + rng.uniform(margin, spec.width_m - margin),
                    spec.origin.y + rng.uniform(margin, spec.height_m - margin)};
      bool clear = true;
      for (const auto& t : taken) {
        if (std::hypot(c.x - t.center.x, c.y - t.center.y) < radius + t.radius + spec.separation_m) {
          clear = false;
          break;
        }
      }
      if (clear) return c;
    }
  }
  throw ValidationError("infeasible packing: object " + std::to_string(k) + " (" + tag + ") does not fit in a " +
                        std::to_string(spec.width_m) + " x " + std::to_string(spec.height_m) + " m extent");
}

// UV centers replay the packing, which depends on the spec alone; UVs are
// placed before anything else.
std::vector<Placed> uv_placements(const SceneSpec& spec) {
  std::vector<Placed> taken;
  for (int k = 0; k < spec.n_uv; ++k) {
    const double r = uv_pack_radius(spec, k);
    taken.push_back({place(spec, "uv-place", k, r, taken), r});
  }
  return taken;
}

bool footprint_inside(const RegionPolygon& poly, const Box& b) {
  return poly.contains({b.min_x, b.min_y}) && poly.contains({b.max_x, b.min_y}) &&
         poly.contains({b.max_x, b.max_y}) && poly.contains({b.min_x, b.max_y});
}

Box grow(const Box& b, double d) { return {b.min_x - d, b.min_y - d, b.max_x + d, b.max_y + d}; }

nlohmann::json frame_json(const Frame& f) {
  return {{"width", f.width}, {"height", f.height}, {"origin_x", f.origin.x}, {"origin_y", f.origin.y},
          {"resolution", f.resolution}};
}

geomesh::FeatureCollection collection(int epsg) {
  geomesh::FeatureCollection fc;
  fc.crs_epsg = epsg;
  return fc;
}

}  // namespace

void SceneSpec::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("scene spec: " + m); };
  if (!(width_m > 0 && height_m > 0 && std::isfinite(width_m) && std::isfinite(height_m))) fail("extent must be positive");
  if (!(resolution_m > 0)) fail("resolution_m must be positive");
  const double cw = width_m / resolution_m, ch = height_m / resolution_m;
  if (std::abs(cw - std::round(cw)) > 1e-9 || std::abs(ch - std::round(ch)) > 1e-9)
    fail("extent must be a whole number of pixels");
  if (n_uv < 0 || confuser_count < 0) fail("counts must be non-negative");
  if (!(uv_area_min_m2 > 0 && uv_area_max_m2 >= uv_area_min_m2)) fail("uv area range is empty");
  if (!(boundary_noise >= 0.0 && boundary_noise <= 1.0)) fail("boundary_noise must be in [0,1]");
  if (!(separation_m >= 0)) fail("separation_m must be non-negative");
  if (!(uv_building_m > 0 && uv_building_pitch_m > uv_building_m)) fail("uv building pitch must exceed its size");
  if (!(formal_building_min_m > 0 && formal_building_max_m >= formal_building_min_m &&
        formal_pitch_m > formal_building_max_m))
    fail("formal building sizes must fit their pitch");
  if (!(uv_height_min_m > 0 && uv_height_max_m >= uv_height_min_m)) fail("uv height range is empty");
  if (!(formal_height_min_m > uv_height_max_m && formal_height_max_m >= formal_height_min_m))
    fail("formal heights must lie above uv heights");
}

nlohmann::json SceneSpec::to_json() const {
  return {{"seed", seed},
          {"width_m", width_m},
          {"height_m", height_m},
          {"origin_x", origin.x},
          {"origin_y", origin.y},
          {"resolution_m", resolution_m},
          {"crs_epsg", crs_epsg},
          {"n_uv", n_uv},
          {"uv_area_min_m2", uv_area_min_m2},
          {"uv_area_max_m2", uv_area_max_m2},
          {"boundary_noise", boundary_noise},
          {"confuser_count", confuser_count},
          {"separation_m", separation_m},
          {"uv_building_m", uv_building_m},
          {"uv_building_pitch_m", uv_building_pitch_m},
          {"uv_height_min_m", uv_height_min_m},
          {"uv_height_max_m", uv_height_max_m},
          {"formal_building_min_m", formal_building_min_m},
          {"formal_building_max_m", formal_building_max_m},
          {"formal_pitch_m", formal_pitch_m},
          {"formal_height_min_m", formal_height_min_m},
          {"formal_height_max_m", formal_height_max_m}};
}

SceneSpec SceneSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("scene spec must be a JSON object");
  SceneSpec s;
  const nlohmann::json known = s.to_json();
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ValidationError("scene spec: unknown key '" + k + "'");
    if (!v.is_number()) throw ValidationError("scene spec: '" + k + "' must be a number");
  }
  auto num = [&](const char* k, double& out) {
    if (j.contains(k)) out = j.at(k).get<double>();
  };
  auto integer = [&](const char* k, int& out) {
    if (j.contains(k)) out = j.at(k).get<int>();
  };
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  num("width_m", s.width_m);
  num("height_m", s.height_m);
  num("origin_x", s.origin.x);
  num("origin_y", s.origin.y);
  num("resolution_m", s.resolution_m);
  integer("crs_epsg", s.crs_epsg);
  integer("n_uv", s.n_uv);
  num("uv_area_min_m2", s.uv_area_min_m2);
  num("uv_area_max_m2", s.uv_area_max_m2);
  num("boundary_noise", s.boundary_noise);
  integer("confuser_count", s.confuser_count);
  num("separation_m", s.separation_m);
  num("uv_building_m", s.uv_building_m);
  num("uv_building_pitch_m", s.uv_building_pitch_m);
  num("uv_height_min_m", s.uv_height_min_m);
  num("uv_height_max_m", s.uv_height_max_m);
  num("formal_building_min_m", s.formal_building_min_m);
  num("formal_building_max_m", s.formal_building_max_m);
  num("formal_pitch_m", s.formal_pitch_m);
  num("formal_height_min_m", s.formal_height_min_m);
  num("formal_height_max_m", s.formal_height_max_m);
  return s;
}

Scene generate(const SceneSpec& spec) {
  spec.validate();
  Scene scene;
  scene.spec = spec;
  scene.frame = Frame{static_cast<int>(std::lround(spec.width_m / spec.resolution_m)),
                      static_cast<int>(std::lround(spec.height_m / spec.resolution_m)),
                      {spec.origin.x, spec.origin.y + spec.height_m},
                      spec.resolution_m};
  const Box extent{spec.origin.x, spec.origin.y, spec.origin.x + spec.width_m, spec.origin.y + spec.height_m};
  scene.city.city_id = "synth-" + std::to_string(spec.seed);
  scene.city.region_key = "synthetic";
  scene.city.gub = {geomesh::box_polygon(extent)};

  std::vector<Placed> taken = uv_placements(spec);
  for (int k = 0; k < spec.n_uv; ++k)
    scene.city.uv_regions.push_back(uv_shape(spec, k, taken[static_cast<std::size_t>(k)].center).polygon());
  std::vector<Confuser> shapes;
  for (int k = 0; k < spec.confuser_count; ++k) {
    const Confuser cf = confuser_shape(spec, k);
    const Point c = place(spec, "confuser-place", k, cf.pack_radius(), taken);
    taken.push_back({c, cf.pack_radius()});
    scene.confusers.push_back(rotated_rect(c, cf.w, cf.h, cf.angle));
  }

  // Dense low-rise fabric inside each UV.
  for (std::size_t k = 0; k < scene.city.uv_regions.size(); ++k) {
    const auto& uv = scene.city.uv_regions[k];
    CounterRng rng(stream(spec.seed, "uv-buildings", k));
    const double pitch = spec.uv_building_pitch_m;
    const double ox = uv.bounds().min_x + rng.uniform(0.0, pitch);
    const double oy = uv.bounds().min_y + rng.uniform(0.0, pitch);
    for (double y = oy; y + spec.uv_building_m <= uv.bounds().max_y; y += pitch) {
      for (double x = ox; x + spec.uv_building_m <= uv.bounds().max_x; x += pitch) {
        const double side = spec.uv_building_m * rng.uniform(0.85, 1.0);
        const double h = rng.uniform(spec.uv_height_min_m, spec.uv_height_max_m);
        const Box b{x, y, x + side, y + side};
        if (footprint_inside(uv, b)) scene.buildings.push_back({geomesh::box_polygon(b), h});
      }
    }
  }
  // Industrial sheds on the confusers: footprints shrunk toward the center.
  for (std::size_t k = 0; k < scene.confusers.size(); ++k) {
    CounterRng rng(stream(spec.seed, "confuser-buildings", k));
    const auto& ring = scene.confusers[k].exterior();
    const Point c = scene.confusers[k].centroid();
    Ring shed;
    for (const auto& p : ring) shed.push_back(c + (p - c) * 0.8);
    scene.buildings.push_back({RegionPolygon(std::move(shed)), rng.uniform(spec.formal_height_min_m, spec.formal_height_min_m + 10.0)});
  }
  // Sparse high-rise formal fabric clear of every planted object.
  {
    const double pitch = spec.formal_pitch_m;
    std::uint64_t slot = 0;
    for (double y = extent.min_y; y + pitch <= extent.max_y + 1e-9; y += pitch) {
      for (double x = extent.min_x; x + pitch <= extent.max_x + 1e-9; x += pitch, ++slot) {
        CounterRng rng(stream(spec.seed, "formal-buildings", slot));
        const double w = rng.uniform(spec.formal_building_min_m, spec.formal_building_max_m);
        const double d = rng.uniform(spec.formal_building_min_m, spec.formal_building_max_m);
        const double h = rng.uniform(spec.formal_height_min_m, spec.formal_height_max_m);
        const double bx = x + rng.uniform(0.0, pitch - w);
        const double by = y + rng.uniform(0.0, pitch - d);
        const Box b{bx, by, bx + w, by + d};
        bool clear = true;
        for (const auto& t : taken) {
          const Box keep{t.center.x - t.radius, t.center.y - t.radius, t.center.x + t.radius, t.center.y + t.radius};
          if (grow(b, spec.separation_m * 0.5).intersects(keep)) {
            clear = false;
            break;
          }
        }
        if (clear) scene.buildings.push_back({geomesh::box_polygon(b), h});
      }
    }
  }

  scene.truth = spec.n_uv > 0 ? geomesh::rasterize(scene.city.uv_regions, scene.frame) : BinaryMask(scene.frame);
  scene.prediction = corrupted_prediction(scene, spec.boundary_noise, true);
  return scene;
}

std::vector<RegionPolygon> perturbed_regions(const Scene& scene, double boundary_noise) {
  if (!(boundary_noise >= 0.0 && boundary_noise <= 1.0)) throw ValidationError("boundary_noise must be in [0,1]");
  if (boundary_noise == 0.0) return scene.city.uv_regions;
  std::vector<RegionPolygon> out;
  const auto centers = uv_placements(scene.spec);
  if (centers.size() != scene.city.uv_regions.size()) throw ValidationError("scene regions do not match its spec");
  for (std::size_t k = 0; k < centers.size(); ++k) {
    CounterRng rng(stream(scene.spec.seed, "uv-noise", k));
    const Profile prof = Profile::draw(rng);
    // Rebuild from the stored ring so vertex i keeps its own angle.
    const auto& ring = scene.city.uv_regions[k].exterior();
    const Point c = centers[k].center;
    Ring moved;
    for (const auto& p : ring) {
      const double t = std::atan2(p.y - c.y, p.x - c.x);
      const double f = std::max(0.05, 1.0 + boundary_noise * prof.at(t));
      moved.push_back(c + (p - c) * f);
    }
    out.emplace_back(std::move(moved));
  }
  return out;
}

BinaryMask corrupted_prediction(const Scene& scene, double boundary_noise, bool with_confusers) {
  auto polys = perturbed_regions(scene, boundary_noise);
  if (with_confusers) polys.insert(polys.end(), scene.confusers.begin(), scene.confusers.end());
  if (polys.empty()) return BinaryMask(scene.frame);
  return geomesh::rasterize(polys, scene.frame, geomesh::OutsidePolicy::Skip);
}

void write_scene(const Scene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int epsg = scene.spec.crs_epsg;

  auto gub = collection(epsg);
  gub.features.push_back({scene.city.gub, {{"city_id", scene.city.city_id}, {"region", scene.city.region_key}}});
  geomesh::write_geojson(dir / kGub, gub);

  auto truth = collection(epsg);
  for (std::size_t k = 0; k < scene.city.uv_regions.size(); ++k)
    truth.features.push_back({{scene.city.uv_regions[k]}, {{"region_id", k}, {"class", "uv"}}});
  geomesh::write_geojson(dir / kTruth, truth);

  auto conf = collection(epsg);
  auto context = collection(epsg);
  for (std::size_t k = 0; k < scene.confusers.size(); ++k) {
    conf.features.push_back({{scene.confusers[k]}, {{"confuser_id", k}, {"class", "confuser"}}});
    context.features.push_back({{scene.confusers[k]}, {{"function", "industrial"}}});
  }
  geomesh::write_geojson(dir / kConfusers, conf);
  geomesh::write_geojson(dir / kVectorContext, context);

  auto bld = collection(epsg);
  for (const auto& b : scene.buildings) bld.features.push_back({{b.footprint}, {{"height_m", b.height_m}}});
  geomesh::write_geojson(dir / kBuildings, bld);

  geomesh::write_mask(dir / kTruthGrid, scene.truth);
  geomesh::write_mask(dir / kImage, scene.prediction);

  nlohmann::json files = nlohmann::json::object();
  for (const char* name : {kGub, kTruth, kConfusers, kVectorContext, kBuildings, kTruthGrid, kImage})
    files[name] = hex64(fnv1a64(geomesh::read_file(dir / name)));
  const nlohmann::json manifest = {{"spec", scene.spec.to_json()},
                                   {"frame", frame_json(scene.frame)},
                                   {"city_id", scene.city.city_id},
                                   {"region", scene.city.region_key},
                                   {"counts",
                                    {{"uv", scene.city.uv_regions.size()},
                                     {"confusers", scene.confusers.size()},
                                     {"buildings", scene.buildings.size()}}},
                                   {"files", files}};
  geomesh::write_file(dir / kManifest, manifest.dump(2) + "\n");
}

Scene load_scene(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(geomesh::read_file(dir / kManifest));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError((dir / kManifest).string() + ": " + e.what());
  }
  Scene scene;
  scene.spec = SceneSpec::from_json(manifest.at("spec"));
  scene.spec.validate();
  for (const auto& [name, digest] : manifest.at("files").items()) {
    const std::string got = hex64(fnv1a64(geomesh::read_file(dir / name)));
    if (got != digest.get<std::string>())
      throw ValidationError((dir / name).string() + ": digest " + got + " does not match the scene manifest");
  }
  scene.city.city_id = manifest.value("city_id", std::string("synth"));
  scene.city.region_key = manifest.value("region", std::string());
  scene.city.gub = geomesh::read_geojson(dir / kGub).polygons();
  scene.city.uv_regions = geomesh::read_geojson(dir / kTruth).polygons();
  scene.confusers = geomesh::read_geojson(dir / kConfusers).polygons();
  for (const auto& f : geomesh::read_geojson(dir / kBuildings).features) {
    for (const auto& part : f.parts) scene.buildings.push_back({part, f.properties.value("height_m", 0.0)});
  }
  scene.truth = geomesh::read_mask(dir / kTruthGrid);
  scene.prediction = geomesh::read_mask(dir / kImage);
  scene.frame = scene.truth.frame();
  return scene;
}

namespace {

// Pixel offset of `f` inside the scene grid; throws unless aligned.
std::pair<int, int> aligned_offset(const Frame& scene, const Frame& f) {
  if (std::abs(f.resolution - scene.resolution) > 1e-9 * scene.resolution)
    throw ValidationError("request resolution differs from the scene grid");
  const double c = scene.col_of(f.origin.x), r = scene.row_of(f.origin.y);
  if (std::abs(c - std::round(c)) > 1e-6 || std::abs(r - std::round(r)) > 1e-6)
    throw ValidationError("request frame is not aligned with the scene grid");
  return {static_cast<int>(std::lround(c)), static_cast<int>(std::lround(r))};
}

}  // namespace

SegmentationOracle::SegmentationOracle(std::shared_ptr<const Scene> scene, std::string id)
    : scene_(std::move(scene)), id_(std::move(id)) {}

gateway::SegmentationResponse SegmentationOracle::segment(const gateway::TileRequest& req) {
  const Frame f = req.frame ? *req.frame : geomesh::read_frame(req.image_ref);
  const auto [c0, r0] = aligned_offset(scene_->frame, f);
  BinaryMask mask = scene_->prediction.crop(c0, r0, f.width, f.height);
  mask = BinaryMask(f, mask.data());
  if (req.vector_context_present && req.vector_ref) {
    const auto industrial = geomesh::read_geojson(*req.vector_ref).polygons_where("function", "industrial");
    if (!industrial.empty()) {
      const BinaryMask drop = geomesh::rasterize(industrial, f, geomesh::OutsidePolicy::Skip);
      for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c)
          if (drop.at(c, r)) mask.set(c, r, false);
    }
  }
  gateway::SegmentationResponse resp;
  resp.tile_id = req.tile_id;
  resp.backend_id = id_;
  resp.probabilities.frame = f;
  resp.probabilities.values.reserve(f.size());
  for (auto v : mask.data()) resp.probabilities.values.push_back(v ? 0.95f : 0.05f);
  return resp;
}

SnappingRefiner::SnappingRefiner(std::shared_ptr<const Scene> scene, std::string id)
    : scene_(std::move(scene)), id_(std::move(id)) {}

gateway::RefineResponse SnappingRefiner::refine(const gateway::RefineRequest& req) {
  gateway::RefineResponse resp;
  resp.tile_id = req.tile_id;
  resp.region_id = req.region_id;
  resp.backend_id = id_;
  for (const auto& uv : scene_->city.uv_regions) {
    for (const auto& p : req.prompts) {
      if (p.positive() && uv.contains(p.position)) {
        resp.candidates.push_back({geomesh::rasterize(uv, req.frame, geomesh::OutsidePolicy::Skip), kSnapConfidence});
        return resp;
      }
    }
  }
  resp.candidates.push_back({req.mask_prompt ? *req.mask_prompt : BinaryMask(req.frame), kEchoConfidence});
  return resp;
}

SceneEmbeddingProvider::SceneEmbeddingProvider(std::shared_ptr<const Scene> scene) : scene_(std::move(scene)) {
  confusers_ = scene_->confusers.empty()
                   ? BinaryMask(scene_->frame)
                   : geomesh::rasterize(scene_->confusers, scene_->frame, geomesh::OutsidePolicy::Skip);
  std::vector<RegionPolygon> fp;
  for (const auto& b : scene_->buildings) fp.push_back(b.footprint);
  buildings_ = fp.empty() ? BinaryMask(scene_->frame) : geomesh::rasterize(fp, scene_->frame, geomesh::OutsidePolicy::Skip);
}

sampler::EmbeddingMatrix SceneEmbeddingProvider::embed(const sampler::GridCell& cell) {
  const Frame& f = scene_->frame;
  const Box& b = cell.clipped;
  const int c0 = static_cast<int>(std::floor(f.col_of(b.min_x) + 1e-9));
  const int c1 = static_cast<int>(std::ceil(f.col_of(b.max_x) - 1e-9));
  const int r0 = static_cast<int>(std::floor(f.row_of(b.max_y) + 1e-9));
  const int r1 = static_cast<int>(std::ceil(f.row_of(b.min_y) - 1e-9));
  const auto q = [](double v) { return static_cast<std::uint64_t>(std::llround(v * 1000.0)); };
  std::uint64_t key = hash_combine(scene_->spec.seed, q(b.min_x));
  key = hash_combine(key, q(b.min_y));
  key = hash_combine(key, q(b.max_x));
  key = hash_combine(key, q(b.max_y));
  CounterRng jitter(key);

  sampler::EmbeddingMatrix m;
  m.rows = 16;
  m.cols = dimension();
  m.values.reserve(m.rows * m.cols);
  for (int by = 0; by < 4; ++by) {
    for (int bx = 0; bx < 4; ++bx) {
      const int ca = c0 + (c1 - c0) * bx / 4, cb = c0 + (c1 - c0) * (bx + 1) / 4;
      const int ra = r0 + (r1 - r0) * by / 4, rb = r0 + (r1 - r0) * (by + 1) / 4;
      double uv = 0, conf = 0, bld = 0, n = 0;
      for (int r = ra; r < rb; ++r) {
        for (int c = ca; c < cb; ++c) {
          uv += scene_->truth.get(c, r);
          conf += confusers_.get(c, r);
          bld += buildings_.get(c, r);
          n += 1;
        }
      }
      n = std::max(n, 1.0);
      m.values.push_back(uv / n);
      m.values.push_back(conf / n);
      m.values.push_back(bld / n);
      for (std::size_t j = 3; j < m.cols; ++j) m.values.push_back(0.05 * jitter.uniform(-1.0, 1.0) + 0.1);
    }
  }
  return m;
}

void register_oracles(gateway::Gateway& gw, std::shared_ptr<const Scene> scene) {
  auto seg = std::make_shared<SegmentationOracle>(scene);
  gw.register_segmenter(gateway::kMultimodal, seg);
  gw.register_segmenter(gateway::kRsOnly, seg);
  gw.register_refiner("snapping", std::make_shared<SnappingRefiner>(scene));
}

}  // namespace uvkit::synthcity
