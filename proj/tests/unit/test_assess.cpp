#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "support.hpp"
#include "uvkit/assess/assess.hpp"
#include "uvkit/error.hpp"
#include "uvkit/geomesh.hpp"

using namespace uvkit::assess;
using uvkit::geomesh::Box;
using uvkit::geomesh::Point;
using uvkit::geomesh::box_polygon;
using uvkit::testing::unit_frame;

namespace {

// Separating-axis test for a flat-top hexagon against a box: true when the
// two share positive area.
bool hex_box_overlap(Point c, double R, const Box& b) {
  std::vector<Point> hex;
  for (int k = 0; k < 6; ++k) hex.push_back({c.x + R * std::cos(k * M_PI / 3), c.y + R * std::sin(k * M_PI / 3)});
  const std::vector<Point> box{{b.min_x, b.min_y}, {b.max_x, b.min_y}, {b.max_x, b.max_y}, {b.min_x, b.max_y}};
  std::vector<Point> axes{{1, 0}, {0, 1}};
  for (double deg : {30.0, 90.0, 150.0}) axes.push_back({std::cos(deg * M_PI / 180), std::sin(deg * M_PI / 180)});
  for (const auto& a : axes) {
    auto span = [&](const std::vector<Point>& pts) {
      double lo = 1e300, hi = -1e300;
      for (const auto& p : pts) {
        const double v = p.x * a.x + p.y * a.y;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      return std::pair{lo, hi};
    };
    const auto [l1, h1] = span(hex);
    const auto [l2, h2] = span(box);
    if (std::min(h1, h2) - std::max(l1, l2) <= 1e-6) return false;
  }
  return true;
}

// Lattice count by brute enumeration of a generous window with the SAT test.
std::size_t lattice_count(const Box& b, double R) {
  const Point c0{(b.min_x + b.max_x) / 2, (b.min_y + b.max_y) / 2};
  std::size_t n = 0;
  for (int q = -200; q <= 200; ++q)
    for (int r = -200; r <= 200; ++r) {
      const Point c{c0.x + 1.5 * R * q, c0.y + std::sqrt(3.0) * R * (r + (q % 2 != 0 ? 0.5 : 0.0))};
      if (std::abs(c.x - c0.x) > b.width() + 2 * R || std::abs(c.y - c0.y) > b.height() + 2 * R) continue;
      n += hex_box_overlap(c, R, b);
    }
  return n;
}

Region box_region(double x0, double y0, double x1, double y1) { return {box_polygon({x0, y0, x1, y1})}; }

}  // namespace

TEST_CASE("hex tessellation of a small extent is one cell") {
  const auto cells = hex_tessellate(box_polygon({0, 0, 100, 80}), 500.0);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].polygon.vertex_count() == 6);
  CHECK(cells[0].center.x == doctest::Approx(50.0));
}

TEST_CASE("hex tessellation of a 10 km square matches the lattice count") {
  const Box extent{300000, 3400000, 310000, 3410000};
  const auto cells = hex_tessellate(box_polygon(extent), 500.0);
  CHECK(cells.size() == lattice_count(extent, 500.0));
  CHECK(cells.size() == 187);

  PolygonSet polys;
  std::set<std::int64_t> ids;
  for (const auto& c : cells) {
    polys.push_back(c.polygon);
    ids.insert(c.cell_id);
  }
  CHECK(ids.size() == cells.size());
  CHECK(std::is_sorted(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.cell_id < b.cell_id; }));
  const double area = uvkit::geomesh::total_area(polys);
  CHECK(area >= extent.area());
  // Edge-sharing, no overlaps: the union is as large as the sum.
  CHECK(uvkit::geomesh::union_area(polys) == doctest::Approx(area).epsilon(1e-9));
  // Covering: nothing of the extent is left outside the cells.
  CHECK(uvkit::geomesh::intersection_area(PolygonSet{box_polygon(extent)}, polys) ==
        doctest::Approx(extent.area()).epsilon(1e-9));
}

TEST_CASE("hex tessellation matches the lattice oracle on other rectangles") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> side(300, 6000), rad(150, 900);
  for (int t = 0; t < 15; ++t) {
    const Box b{0, 0, side(rng), side(rng)};
    const double R = rad(rng);
    CHECK(hex_tessellate(box_polygon(b), R).size() == lattice_count(b, R));
  }
  CHECK_THROWS_AS(hex_tessellate(box_polygon({0, 0, 10, 10}), 0.0), uvkit::ValidationError);
}

TEST_CASE("sample_cells") {
  const auto lattice = hex_tessellate(box_polygon({0, 0, 12000, 12000}), 500.0);
  REQUIRE(lattice.size() >= 200);
  const std::vector<HexCell> cells(lattice.begin(), lattice.begin() + 200);

  const auto a = sampled_only(sample_cells(cells, 0.15, 7));
  const auto b = sampled_only(sample_cells(cells, 0.15, 7));
  CHECK(a.size() == 30);
  REQUIRE(b.size() == 30);
  for (std::size_t i = 0; i < 30; ++i) CHECK(a[i].cell_id == b[i].cell_id);
  CHECK(sampled_only(sample_cells(cells, 1.0, 7)).size() == 200);

  std::set<std::vector<std::int64_t>> subsets;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::vector<std::int64_t> ids;
    for (const auto& c : sampled_only(sample_cells(cells, 0.15, seed))) ids.push_back(c.cell_id);
    subsets.insert(ids);
  }
  CHECK(subsets.size() == 100);

  // Stable under re-enumeration.
  auto reversed = cells;
  std::reverse(reversed.begin(), reversed.end());
  std::set<std::int64_t> x, y;
  for (const auto& c : a) x.insert(c.cell_id);
  for (const auto& c : sampled_only(sample_cells(reversed, 0.15, 7))) y.insert(c.cell_id);
  CHECK(x == y);

  CHECK_THROWS_AS(sample_cells(cells, 0.0, 1), uvkit::ValidationError);
  CHECK_THROWS_AS(sample_cells(cells, 1.5, 1), uvkit::ValidationError);
}

TEST_CASE("detection metrics") {
  const std::vector<Region> truth{box_region(0, 0, 10, 10), box_region(20, 0, 30, 10), box_region(40, 0, 50, 10),
                                  box_region(60, 0, 70, 10)};
  SUBCASE("identical") {
    const auto t = detection_metrics(truth, truth);
    CHECK(t.precision() == 1.0);
    CHECK(t.recall() == 1.0);
    CHECK(t.f1() == 1.0);
  }
  SUBCASE("disjoint") {
    const auto t = detection_metrics({box_region(100, 100, 110, 110)}, truth);
    CHECK(t.precision() == 0.0);
    CHECK(t.recall() == 0.0);
    CHECK(t.f1() == 0.0);
  }
  SUBCASE("hand-counted 3 predicted, 4 truth") {
    const std::vector<Region> pred{box_region(5, 2, 25, 8), box_region(45, 5, 55, 15), box_region(80, 0, 90, 10)};
    const auto t = detection_metrics(pred, truth);
    CHECK(t.tp == 2);
    CHECK(t.fp == 1);
    CHECK(t.truth_detected == 3);
    CHECK(t.missed == 1);
    CHECK(t.precision() == doctest::Approx(2.0 / 3));
    CHECK(t.recall() == doctest::Approx(0.75));
    CHECK(t.f1() == doctest::Approx(0.7059).epsilon(1e-4));
    CHECK(t.pairs.size() == 3);

    auto shuffled_pred = pred;
    auto shuffled_truth = truth;
    std::reverse(shuffled_pred.begin(), shuffled_pred.end());
    std::rotate(shuffled_truth.begin(), shuffled_truth.begin() + 1, shuffled_truth.end());
    const auto u = detection_metrics(shuffled_pred, shuffled_truth);
    CHECK(u.tp == t.tp);
    CHECK(u.truth_detected == t.truth_detected);
  }
  SUBCASE("overlap threshold") {
    // 5 of 100 m2 overlap.
    const std::vector<Region> pred{box_region(9.5, 0, 19.5, 10)};
    CHECK(detection_metrics(pred, truth, 0.0).tp == 1);
    CHECK(detection_metrics(pred, truth, 0.1).tp == 0);
    CHECK(detection_metrics(pred, truth, 0.1).truth_detected == 1);
    CHECK_THROWS_AS(detection_metrics(pred, truth, 1.0), uvkit::ValidationError);
  }
  SUBCASE("empty sets") {
    const auto t = detection_metrics({}, {});
    CHECK(t.tp + t.fp + t.truth_detected + t.missed == 0);
    CHECK(t.f1() == 0.0);
  }
}

TEST_CASE("segmentation IoU") {
  const auto f = unit_frame(64, 64);
  const PolygonSet a{box_polygon({8, -40, 40, -8})};
  CHECK(segmentation_iou(a, a, f) == 1.0);
  const PolygonSet half{box_polygon({8, -40, 24, -8})};
  CHECK(segmentation_iou(half, a, f) == 0.5);
  uvkit::geomesh::BinaryMask other(unit_frame(32, 32));
  CHECK_THROWS_AS(segmentation_iou(a, a, f, &other), uvkit::FrameMismatch);

  // Pixel-center oracle on random polygon pairs.
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(1, 63);
  for (int t = 0; t < 40; ++t) {
    auto tri = [&] {
      for (;;) {
        uvkit::geomesh::Ring r{{u(rng), -u(rng)}, {u(rng), -u(rng)}, {u(rng), -u(rng)}};
        if (std::abs(uvkit::geomesh::signed_area(r)) > 20) return uvkit::geomesh::RegionPolygon(r);
      }
    };
    const PolygonSet p{tri()}, q{tri()};
    std::size_t inter = 0, uni = 0;
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        const Point ctr{c + 0.5, -(r + 0.5)};
        const bool x = uvkit::testing::oracle_inside(p[0], ctr), y = uvkit::testing::oracle_inside(q[0], ctr);
        inter += x && y;
        uni += x || y;
      }
    const auto px = pixel_counts(p, q, f);
    CHECK(px.intersection == inter);
    CHECK(px.union_ == uni);
    // IoU and Dice on the same rasters obey IoU = D / (2 - D).
    const double d = px.dice();
    CHECK(px.iou() == doctest::Approx(d / (2 - d)).epsilon(1e-12));
  }
}

TEST_CASE("report aggregation") {
  const auto f = unit_frame(200, 200, 1.0, {0, 200});
  const PolygonSet truth{box_polygon({10, 10, 50, 50}), box_polygon({100, 100, 150, 150}),
                         box_polygon({160, 20, 190, 60})};
  const PolygonSet pred{box_polygon({12, 10, 52, 50}), box_polygon({100, 100, 150, 140}),
                        box_polygon({60, 160, 80, 180})};
  const auto cells = hex_tessellate(box_polygon(f.bounds()), 60.0);
  const auto all = sample_cells(cells, 1.0, 1);

  const auto e1 = evaluate_city("a", "North", pred, truth, all, f);
  const auto e2 = evaluate_city("b", "North", truth, truth, all, f);
  CHECK(e1.sample_area_m2 == doctest::Approx(200.0 * 200.0));
  const auto rep = assess({e1, e2});
  // One stratum: stratified equals pooled.
  REQUIRE(rep.strata.size() == 1);
  CHECK(rep.strata.at("North").f1 == rep.overall.f1);
  CHECK(rep.strata.at("North").iou == rep.overall.iou);
  CHECK(rep.overall.tally.tp == 2 + 3);
  CHECK(rep.overall.tally.fp == 1);
  CHECK(rep.cities.at("b").f1 == 1.0);
  CHECK(rep.cities.at("b").iou == 1.0);
  CHECK(rep.sensitivity.size() == 3);
  CHECK(rep.sample_area_km2 == doctest::Approx(0.08));
  const auto j = rep.to_json();
  CHECK(j["overall"]["f1"] == rep.overall.f1);
  CHECK(j["sensitivity"].size() == 3);
  CHECK(rep.to_table().find("overall") != std::string::npos);

  // f1 collapses to P when P = R.
  DetectionTally t;
  t.tp = 77;
  t.fp = 23;
  t.truth_detected = 77;
  t.missed = 23;
  CHECK(t.f1() == doctest::Approx(0.77));
}

TEST_CASE("compare_products") {
  const auto f = unit_frame(200, 200, 1.0, {0, 200});
  const PolygonSet truth{box_polygon({10, 10, 50, 50}), box_polygon({100, 100, 150, 150})};
  SUBCASE("identical products score identically") {
    const auto rows = compare_products({{"x", truth, {}}, {"y", truth, {}}}, truth, f);
    CHECK(rows[0].metrics.f1 == rows[1].metrics.f1);
    CHECK(rows[0].metrics.iou == rows[1].metrics.iou);
    CHECK(rows[0].name == "x");
  }
  SUBCASE("truth beats empty") {
    const auto rows = compare_products({{"empty", {}, {}}, {"truth", truth, {}}}, truth, f);
    CHECK(rows[0].name == "truth");
    CHECK(rows[0].metrics.f1 == 1.0);
    CHECK(rows[1].metrics.f1 == 0.0);
    CHECK(comparison_json(rows).size() == 2);
  }
  SUBCASE("scored only on shared coverage") {
    // B only covers the left half, so the right truth region is out of play for both.
    const auto rows = compare_products({{"a", {truth[0]}, {}}, {"b", {truth[0]}, PolygonSet{box_polygon({0, 0, 90, 200})}}},
                                       truth, f);
    CHECK(rows[0].metrics.f1 == 1.0);
    CHECK(rows[1].metrics.f1 == 1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(compare_products({{"a", truth, {}}}, truth, f), uvkit::ValidationError);
    CHECK_THROWS_AS(compare_products({{"a", truth, PolygonSet{box_polygon({0, 0, 10, 10})}},
                                      {"b", truth, PolygonSet{box_polygon({50, 50, 60, 60})}}},
                                     truth, f),
                    uvkit::ValidationError);
  }
}
