#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "support.hpp"
#include "uvkit/assess/assess.hpp"
#include "uvkit/error.hpp"
#include "uvkit/gateway/gateway.hpp"
#include "uvkit/geomesh.hpp"
#include "uvkit/promptgen/promptgen.hpp"
#include "uvkit/sampler/sampler.hpp"
#include "uvkit/synthcity/synthcity.hpp"

using namespace uvkit;
using namespace uvkit::synthcity;
using uvkit::testing::scratch_dir;

namespace {

std::shared_ptr<const Scene> default_scene() {
  static const auto s = std::make_shared<const Scene>(generate({}));
  return s;
}

double pixel_iou(const BinaryMask& a, const BinaryMask& b) {
  std::size_t i = 0, u = 0;
  for (std::size_t k = 0; k < a.data().size(); ++k) {
    i += a.data()[k] && b.data()[k];
    u += a.data()[k] || b.data()[k];
  }
  return u == 0 ? 1.0 : static_cast<double>(i) / static_cast<double>(u);
}

}  // namespace

TEST_CASE("generation is deterministic down to the bytes") {
  const auto a = scratch_dir("scene_a"), b = scratch_dir("scene_b");
  write_scene(generate({}), a);
  write_scene(generate({}), b);
  for (const char* f : {kManifest, kGub, kTruth, kConfusers, kVectorContext, kBuildings, kTruthGrid, kImage}) {
    CAPTURE(f);
    CHECK(geomesh::read_file(a / f) == geomesh::read_file(b / f));
  }
  SceneSpec other;
  other.seed = 8;
  write_scene(generate(other), b);
  CHECK(geomesh::read_file(a / kTruth) != geomesh::read_file(b / kTruth));
}

TEST_CASE("corruption levels") {
  SceneSpec clean;
  clean.boundary_noise = 0.0;
  clean.confuser_count = 0;
  const Scene s = generate(clean);
  CHECK(s.prediction == s.truth);

  const auto scene = default_scene();
  const BinaryMask noisy = corrupted_prediction(*scene, 0.2, false);
  const double iou = pixel_iou(noisy, scene->truth);
  CHECK(iou == doctest::Approx(geomesh::mask_iou(noisy, scene->truth)));
  CHECK(iou < 0.99);
  CHECK(iou > 0.5);
  // Confusers only add foreground.
  CHECK(scene->prediction.count() > noisy.count());
}

TEST_CASE("scene invariants hold across seeds") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    const Scene s = generate(spec);
    CAPTURE(seed);
    REQUIRE(s.city.uv_regions.size() == 25);
    REQUIRE(s.confusers.size() == 5);
    std::vector<geomesh::RegionPolygon> all = s.city.uv_regions;
    all.insert(all.end(), s.confusers.begin(), s.confusers.end());
    const geomesh::Box ext = s.frame.bounds();
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (const auto& v : all[i].exterior()) CHECK(ext.contains(v));
      for (std::size_t j = i + 1; j < all.size(); ++j) CHECK(geomesh::intersection_area(all[i], all[j]) == 0.0);
    }
    const auto st = analytics::building_stats(s.city, s.buildings);
    CHECK(st.uv.bcr() > st.non_uv.bcr());
    CHECK(st.uv.mean_height_m() < st.non_uv.mean_height_m());
  }
}

TEST_CASE("infeasible packing and bad specs") {
  SceneSpec crowded;
  crowded.width_m = crowded.height_m = 300.0;
  CHECK_THROWS_AS(generate(crowded), ValidationError);
  SceneSpec bad;
  bad.boundary_noise = 1.5;
  CHECK_THROWS_AS(generate(bad), ValidationError);
  CHECK_THROWS_AS(SceneSpec::from_json({{"n_uvs", 3}}), ValidationError);
  CHECK(SceneSpec::from_json(SceneSpec{}.to_json()).to_json() == SceneSpec{}.to_json());
}

TEST_CASE("scene files round trip") {
  const auto dir = scratch_dir("scene_rt");
  const auto scene = default_scene();
  write_scene(*scene, dir);
  const Scene back = load_scene(dir);
  CHECK(back.truth == scene->truth);
  CHECK(back.prediction == scene->prediction);
  CHECK(back.city.uv_regions.size() == scene->city.uv_regions.size());
  CHECK(back.buildings.size() == scene->buildings.size());
  CHECK(back.city.uv_regions[3].exterior() == scene->city.uv_regions[3].exterior());
  CHECK(back.buildings[10].height_m == scene->buildings[10].height_m);
  CHECK(perturbed_regions(back, 0.2)[4].exterior() == perturbed_regions(*scene, 0.2)[4].exterior());

  geomesh::write_file(dir / kBuildings, geomesh::read_file(dir / kBuildings) + " ");
  CHECK_THROWS_AS(load_scene(dir), ValidationError);
}

TEST_CASE("snapping refiner") {
  const auto scene = default_scene();
  SnappingRefiner ref(scene);
  const auto& uv = scene->city.uv_regions[0];
  const geomesh::Frame f = scene->frame;

  gateway::RefineRequest hit{"t", 1, f, {{uv.centroid(), gateway::PromptLabel::Positive}}, std::nullopt};
  const auto r = ref.refine(hit);
  CHECK(r.best().confidence == SnappingRefiner::kSnapConfidence);
  CHECK(r.best().mask == geomesh::rasterize(uv, f));

  // A negative inside the region is not a positive.
  gateway::RefineRequest miss{"t", 1, f, {{uv.centroid(), gateway::PromptLabel::Negative},
                                          {scene->confusers[0].centroid(), gateway::PromptLabel::Positive}},
                              std::nullopt};
  const auto e = ref.refine(miss);
  CHECK(e.best().confidence == SnappingRefiner::kEchoConfidence);
  CHECK(e.best().mask.empty());
  CHECK(promptgen::decide_mask_prompt(e.best().confidence, 1.0));

  miss.mask_prompt = geomesh::rasterize(scene->confusers[0], f);
  CHECK(ref.refine(miss).best().mask == *miss.mask_prompt);
}

TEST_CASE("segmentation oracle routes") {
  const auto scene = default_scene();
  const auto dir = scratch_dir("oracle");
  write_scene(*scene, dir);
  gateway::Gateway gw;
  register_oracles(gw, scene);

  const geomesh::Frame tile = scene->frame.window(0, 0, 1024, 1024);
  gateway::TileRequest rs{"t0", (dir / kImage).string(), 1024, false, std::nullopt, tile};
  const auto plain = gw.segment(rs).probabilities.threshold();
  CHECK(plain == scene->prediction);

  gateway::TileRequest mm = rs;
  mm.vector_context_present = true;
  mm.vector_ref = (dir / kVectorContext).string();
  const auto suppressed = gw.segment(mm).probabilities.threshold();
  CHECK(suppressed == corrupted_prediction(*scene, scene->spec.boundary_noise, false));
  CHECK(gw.routing_counts().at(gateway::kMultimodal) == 1);
  CHECK(gw.routing_counts().at(gateway::kRsOnly) == 1);

  // Frames read from the image header work the same.
  rs.frame.reset();
  CHECK(gw.segment(rs).probabilities.threshold() == plain);

  gateway::TileRequest off = rs;
  off.frame = geomesh::Frame{256, 256, {tile.origin.x + 0.5, tile.origin.y}, 1.0};
  CHECK_THROWS_AS(gw.segment(off), ValidationError);
}

TEST_CASE("scene embeddings") {
  const auto scene = default_scene();
  SceneEmbeddingProvider p(scene);
  const auto grid = sampler::make_grid(scene->frame.bounds(), 512);
  REQUIRE(grid.cells.size() == 4);
  const sampler::GridCell clone = grid.cells[1];
  const auto a = sampler::mean_pool(p.embed(grid.cells[1]));
  const auto b = sampler::mean_pool(p.embed(clone));
  CHECK(sampler::similarity(a, {b}) == doctest::Approx(1.0).epsilon(1e-12));
  const auto m = p.embed(grid.cells[0]);
  CHECK(m.rows == 16);
  CHECK(m.cols == p.dimension());
  CHECK_NOTHROW(gateway::validate(m, p.dimension()));
}

TEST_CASE("product comparison orders by corruption") {
  const auto scene = default_scene();
  std::vector<assess::Product> products;
  for (double noise : {0.0, 0.1, 0.3}) {
    const auto regions = geomesh::vectorize(corrupted_prediction(*scene, noise, false));
    products.push_back({"noise-" + std::to_string(noise), regions, std::nullopt});
  }
  const auto rows = assess::compare_products(products, scene->city.uv_regions, scene->frame);
  std::map<std::string, double> iou;
  for (const auto& r : rows) iou[r.name] = r.metrics.iou;
  CHECK(iou.at(products[0].name) == doctest::Approx(1.0));
  CHECK(iou.at(products[0].name) > iou.at(products[1].name));
  CHECK(iou.at(products[1].name) > iou.at(products[2].name));
}

TEST_CASE("oracle refinement recovers the truth") {
  const auto scene = default_scene();
  const auto dir = scratch_dir("refine");
  write_scene(*scene, dir);
  gateway::Gateway gw;
  gw.set_sleeper([](double) {});
  register_oracles(gw, scene);
  const geomesh::Frame tile = scene->frame;
  gateway::TileRequest mm{"t0", (dir / kImage).string(), 1024, true, (dir / kVectorContext).string(), tile};
  const auto initial = gw.segment(mm).probabilities.threshold();
  const auto out = promptgen::refine_tile(initial, gw, "t0");
  CHECK(out.outcomes.size() == 25);
  CHECK(out.fallbacks() == 0);
  CHECK(pixel_iou(out.refined, scene->truth) > pixel_iou(initial, scene->truth));
  CHECK(pixel_iou(out.refined, scene->truth) > 0.99);
}
