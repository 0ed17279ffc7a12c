#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support.hpp"
#include "uvkit/error.hpp"
#include "uvkit/gateway/gateway.hpp"
#include "uvkit/gateway/mock.hpp"
#include "uvkit/geomesh.hpp"
#include "uvkit/promptgen/promptgen.hpp"

using namespace uvkit::promptgen;
using namespace uvkit::geomesh;
using uvkit::testing::unit_frame;

namespace {

BinaryMask rect(const Frame& f, int c0, int r0, int w, int h) {
  BinaryMask m(f);
  for (int r = r0; r < r0 + h; ++r)
    for (int c = c0; c < c0 + w; ++c) m.set(c, r, true);
  return m;
}

// Returns the truth component under the first positive point (confidence
// 0.95), else echoes the mask prompt at 0.5.
struct Snapping : uvkit::gateway::Refiner {
  LabeledComponents truth;
  explicit Snapping(const BinaryMask& t) : truth(connected_components(t)) {}
  uvkit::gateway::RefineResponse refine(const uvkit::gateway::RefineRequest& req) override {
    for (const auto& p : req.prompts) {
      if (!p.positive()) continue;
      const int c = static_cast<int>(std::floor(req.frame.col_of(p.position.x)));
      const int r = static_cast<int>(std::floor(req.frame.row_of(p.position.y)));
      if (c < 0 || r < 0 || c >= req.frame.width || r >= req.frame.height) continue;
      if (const int l = truth.label_at(c, r); l > 0) {
        return {req.tile_id, req.region_id, {{truth.component_mask(l), 0.95}}, "snap"};
      }
    }
    BinaryMask echo = req.mask_prompt ? *req.mask_prompt : BinaryMask(req.frame);
    return {req.tile_id, req.region_id, {{echo, 0.5}}, "snap"};
  }
};

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.data().size(); ++i)
    if (a.data()[i] && !b.data()[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("preprocess") {
  const Frame f = unit_frame(200, 200);
  CHECK(preprocess(BinaryMask(f), 3, 1000).count == 0);

  BinaryMask clean = rect(f, 10, 10, 60, 60);
  clean |= rect(f, 100, 120, 80, 40);
  const auto comps = preprocess(clean, 3, 1000);
  CHECK(comps.count == 2);
  CHECK(comps.foreground() == clean);

  // Oracle composition: naive opening, then flood-fill areas.
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const BinaryMask noisy = uvkit::testing::random_blobs(rng, 160, 160, 14);
    const auto got = preprocess(noisy, 3, 1000);
    const BinaryMask opened = uvkit::testing::naive_dilate(uvkit::testing::naive_erode(noisy, 3), 3);
    const auto areas = uvkit::testing::flood_fill_areas(opened);
    std::size_t big = 0;
    for (auto a : areas) big += a >= 1000;
    CHECK(static_cast<std::size_t>(got.count) == big);
    for (auto a : got.areas) CHECK(a >= 1000);
    CHECK(subset(got.foreground(), opened));
  }
}

TEST_CASE("square region prompts") {
  const Frame f = unit_frame(100, 100);
  const BinaryMask sq = rect(f, 25, 25, 50, 50);
  const auto set = generate_prompts(sq, 1, nullptr, 12, 3.0);
  REQUIRE(set.points.size() == 9);
  CHECK(set.points[0].positive());
  CHECK(set.points[0].position.x == doctest::Approx(50.0));
  CHECK(set.points[0].position.y == doctest::Approx(-50.0));
  CHECK(set.positives() == 5);
  CHECK(set.negatives() == 4);
  const RegionPolygon poly({{25, -75}, {75, -75}, {75, -25}, {25, -25}});
  for (const auto& p : set.points) {
    if (p.positive()) {
      CHECK(uvkit::testing::oracle_strictly_inside_any({poly}, p.position));
    } else {
      CHECK(uvkit::testing::oracle_strictly_outside_all({poly}, p.position));
      // Outward along the diagonal by 3 m.
      CHECK(uvkit::testing::oracle_boundary_distance(poly, p.position) == doctest::Approx(3.0));
    }
  }
}

TEST_CASE("crescent anchors on the pole") {
  const Frame f = unit_frame(120, 120);
  BinaryMask m(f);
  for (int r = 0; r < 120; ++r)
    for (int c = 0; c < 120; ++c) {
      const double d1 = std::hypot(c + 0.5 - 60, r + 0.5 - 60);
      const double d2 = std::hypot(c + 0.5 - 68, r + 0.5 - 60);
      m.set(c, r, d1 < 50 && d2 > 45);
    }
  // The horn tips break off under 4-connectivity; keep the body.
  const auto comps = connected_components(m);
  const auto largest = std::max_element(comps.areas.begin(), comps.areas.end()) - comps.areas.begin();
  m = comps.component_mask(static_cast<int>(largest) + 1);
  const auto polys = vectorize(m);
  REQUIRE(polys.size() == 1);
  CHECK_FALSE(uvkit::testing::oracle_inside(polys[0], polys[0].centroid()));
  const auto set = generate_prompts(m, 1);
  const auto pole = pole_of_inaccessibility(polys[0], 1.0);
  CHECK(set.points[0].position == pole.point);
  CHECK(uvkit::testing::oracle_strictly_inside_any(polys, set.points[0].position));
}

TEST_CASE("prompt validity over 100 random regions") {
  std::mt19937_64 rng(77);
  std::size_t positives = 0, negatives = 0;
  for (int t = 0; t < 100; ++t) {
    const auto s = uvkit::testing::random_region(rng, 128);
    const auto region_polys = vectorize(s.region);
    const auto all_polys = vectorize(s.all);
    const auto set = generate_prompts(s.region, t + 1, &s.all);
    REQUIRE(set.positives() >= 1);
    for (const auto& p : set.points) {
      REQUIRE(s.region.frame().bounds().contains(p.position));
      if (p.positive()) {
        REQUIRE(uvkit::testing::oracle_strictly_inside_any(region_polys, p.position));
        ++positives;
      } else {
        REQUIRE(uvkit::testing::oracle_strictly_outside_all(all_polys, p.position));
        ++negatives;
      }
    }
  }
  CHECK(positives > 100);
  CHECK(negatives > 100);
}

TEST_CASE("vertex budget is honored") {
  std::mt19937_64 rng(78);
  for (int t = 0; t < 30; ++t) {
    const auto s = uvkit::testing::random_region(rng, 96);
    for (int budget : {3, 5, 12}) {
      const auto set = generate_prompts(s.region, 1, &s.all, budget);
      CHECK(set.points.size() <= 1 + 2 * static_cast<std::size_t>(budget));
    }
  }
  CHECK_THROWS_AS(generate_prompts(BinaryMask(unit_frame(8, 8)), 1), uvkit::ValidationError);
}

TEST_CASE("decide_mask_prompt truth table") {
  CHECK(decide_mask_prompt(0.55, 0.95));
  CHECK(decide_mask_prompt(0.90, 0.65));
  CHECK_FALSE(decide_mask_prompt(0.90, 0.90));
  CHECK_FALSE(decide_mask_prompt(0.60, 0.70));
  CHECK_THROWS_AS(decide_mask_prompt(1.2, 0.5), uvkit::ValidationError);
  CHECK_THROWS_AS(decide_mask_prompt(0.5, -0.1), uvkit::ValidationError);
  CHECK_THROWS_AS(decide_mask_prompt(std::nan(""), 0.5), uvkit::ValidationError);
}

TEST_CASE("decide_mask_prompt is monotone") {
  for (int a = 0; a <= 100; ++a)
    for (int b = 0; b <= 100; ++b) {
      const double c = a / 100.0, i = b / 100.0;
      const bool here = decide_mask_prompt(c, i);
      if (!here) {
        if (a < 100) REQUIRE_FALSE(decide_mask_prompt((a + 1) / 100.0, i));
        if (b < 100) REQUIRE_FALSE(decide_mask_prompt(c, (b + 1) / 100.0));
      }
    }
}

TEST_CASE("refine_tile") {
  const Frame f = unit_frame(1024, 1024, 1.0, {5000.0, 9000.0});
  BinaryMask truth = rect(f, 100, 100, 120, 90);
  truth |= rect(f, 500, 600, 200, 150);
  truth |= rect(f, 800, 80, 60, 200);

  // Noisy initial: shifted blocks plus a speck that preprocessing removes.
  BinaryMask initial = rect(f, 108, 96, 118, 92);
  initial |= rect(f, 490, 610, 205, 150);
  initial |= rect(f, 806, 76, 60, 190);
  initial |= rect(f, 10, 10, 20, 20);

  SUBCASE("empty mask makes no calls") {
    uvkit::gateway::Gateway gw;
    gw.register_refiner("snap", std::make_shared<Snapping>(truth));
    const auto r = refine_tile(BinaryMask(f), gw, "t0");
    CHECK(r.refined.empty());
    CHECK(r.backend_calls == 0);
  }
  SUBCASE("snapping refiner recovers the truth") {
    uvkit::gateway::Gateway gw;
    gw.register_refiner("snap", std::make_shared<Snapping>(truth));
    const auto r = refine_tile(initial, gw, "t1");
    CHECK(r.refined == truth);
    CHECK(r.backend_calls == 3);
    CHECK(r.fallbacks() == 0);
    for (const auto& o : r.outcomes) CHECK(o.confidence == 0.95);
    const auto log = r.log("t1");
    CHECK(log["regions"].size() == 3);
  }
  SUBCASE("identity refiner at confidence 0 reproduces the preprocessed mask") {
    uvkit::gateway::Gateway gw;
    gw.register_refiner("identity", std::make_shared<uvkit::gateway::IdentityRefiner>(0.0));
    const auto r = refine_tile(initial, gw, "t2");
    CHECK(r.refined == preprocess(initial, 3, 1000).foreground());
    CHECK(r.backend_calls == 6);
    for (const auto& o : r.outcomes) {
      CHECK(o.used_mask_prompt);
      CHECK(o.iou_vs_initial == 1.0);
    }
  }
  SUBCASE("transport failures fall back per region") {
    uvkit::gateway::Gateway gw;
    gw.set_sleeper([](double) {});
    gw.register_refiner("down", std::make_shared<uvkit::gateway::FailingRefiner>());
    const auto r = refine_tile(initial, gw, "t3");
    CHECK(r.refined == preprocess(initial, 3, 1000).foreground());
    CHECK(r.fallbacks() == 3);
    CHECK(r.log("t3")["regions"][0]["fallback"] == true);
    CHECK(r.log("t3")["regions"][0].contains("warning"));
  }
  SUBCASE("result is order independent") {
    PromptConfig serial;
    serial.max_in_flight = 1;
    uvkit::gateway::Gateway a, b;
    a.register_refiner("snap", std::make_shared<Snapping>(truth));
    b.register_refiner("snap", std::make_shared<Snapping>(truth));
    CHECK(refine_tile(initial, a, "t4", serial).refined == refine_tile(initial, b, "t4").refined);
  }
  SUBCASE("tile size is enforced") {
    uvkit::gateway::Gateway gw;
    gw.register_refiner("snap", std::make_shared<Snapping>(truth));
    CHECK_THROWS_AS(refine_tile(BinaryMask(unit_frame(256, 256)), gw, "t5"), uvkit::ValidationError);
  }
}

TEST_CASE("union merge stays within refiner outputs and fallbacks") {
  std::mt19937_64 rng(90);
  const Frame f = unit_frame(1024, 1024);
  for (int t = 0; t < 3; ++t) {
    BinaryMask truth(f), initial(f);
    for (int k = 0; k < 6; ++k) {
      const int c = static_cast<int>(rng() % 900), r = static_cast<int>(rng() % 900);
      truth |= rect(f, c, r, 60, 60);
      initial |= rect(f, c + static_cast<int>(rng() % 9) - 4, r + static_cast<int>(rng() % 9) - 4, 58, 62);
    }
    uvkit::gateway::Gateway gw;
    gw.register_refiner("snap", std::make_shared<Snapping>(truth));
    const auto r = refine_tile(initial, gw, "u");
    BinaryMask bound(f);
    for (const auto& o : r.outcomes) bound |= o.refined_mask;
    CHECK(subset(r.refined, bound));
  }
}
