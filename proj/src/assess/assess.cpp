#include "uvkit/assess/assess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "uvkit/error.hpp"
#include "uvkit/geomesh/contour.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::assess {

using geomesh::Box;
using geomesh::Point;

std::vector<Region> as_regions(const PolygonSet& polys) {
  std::vector<Region> out;
  out.reserve(polys.size());
  for (const auto& p : polys) out.push_back({p});
  return out;
}

namespace {

RegionPolygon hexagon(Point c, double r) {
  geomesh::Ring ring;
  for (int k = 0; k < 6; ++k) {
    const double a = k * M_PI / 3.0;
    ring.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return RegionPolygon(std::move(ring));
}

Box bounds_of_set(const PolygonSet& set) {
  Box b = set.front().bounds();
  for (const auto& p : set) {
    const Box& o = p.bounds();
    b = {std::min(b.min_x, o.min_x), std::min(b.min_y, o.min_y), std::max(b.max_x, o.max_x), std::max(b.max_y, o.max_y)};
  }
  return b;
}

double region_area(const Region& r) { return geomesh::total_area(r); }

Box region_bounds(const Region& r) { return bounds_of_set(r); }

}  // namespace

std::vector<HexCell> hex_tessellate(const PolygonSet& extent, double R) {
  if (!(R > 0.0) || !std::isfinite(R)) throw ValidationError("hex_tessellate: circumradius must be positive");
  if (extent.empty() || !(geomesh::union_area(extent) > 0.0)) throw ValidationError("hex_tessellate: degenerate extent");
  const PolygonSet merged = geomesh::union_of(extent);
  const Box b = bounds_of_set(merged);
  const Point c0{(b.min_x + b.max_x) / 2.0, (b.min_y + b.max_y) / 2.0};
  const double dx = 1.5 * R;
  const double dy = std::sqrt(3.0) * R;
  const int qmin = static_cast<int>(std::floor((b.min_x - R - c0.x) / dx)) - 1;
  const int qmax = static_cast<int>(std::ceil((b.max_x + R - c0.x) / dx)) + 1;
  const int rmin = static_cast<int>(std::floor((b.min_y - dy - c0.y) / dy)) - 1;
  const int rmax = static_cast<int>(std::ceil((b.max_y + dy - c0.y) / dy)) + 1;
  const int ncols = qmax - qmin + 1;

  std::vector<HexCell> out;
  for (int r = rmax; r >= rmin; --r) {
    for (int q = qmin; q <= qmax; ++q) {
      const double shift = (q % 2 != 0) ? 0.5 : 0.0;
      const Point center{c0.x + q * dx, c0.y + (r + shift) * dy};
      const Box hb{center.x - R, center.y - dy / 2, center.x + R, center.y + dy / 2};
      if (!hb.intersects(b)) continue;
      RegionPolygon hex = hexagon(center, R);
      if (!(geomesh::intersection_area(hex, merged) > 1e-9 * R * R)) continue;
      HexCell cell{0, rmax - r, q - qmin, center, R, std::move(hex), false};
      cell.cell_id = static_cast<std::int64_t>(cell.row) * ncols + cell.col;
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<HexCell> hex_tessellate(const RegionPolygon& extent, double R) {
  return hex_tessellate(PolygonSet{extent}, R);
}

std::vector<HexCell> sample_cells(std::vector<HexCell> cells, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("sample_cells: fraction must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(cells.size())));
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    keyed.emplace_back(hash_combine(seed, static_cast<std::uint64_t>(cells[i].cell_id)), i);
  }
  std::sort(keyed.begin(), keyed.end());
  for (auto& c : cells) c.sampled = false;
  for (std::size_t i = 0; i < k && i < keyed.size(); ++i) cells[keyed[i].second].sampled = true;
  return cells;
}

std::vector<HexCell> sampled_only(const std::vector<HexCell>& cells) {
  std::vector<HexCell> out;
  for (const auto& c : cells)
    if (c.sampled) out.push_back(c);
  return out;
}

PolygonSet footprint(const std::vector<HexCell>& cells) {
  PolygonSet polys;
  for (const auto& c : cells) polys.push_back(c.polygon);
  return geomesh::union_of(polys);
}

double DetectionTally::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp); }

double DetectionTally::recall() const {
  return truth_detected + missed == 0 ? 0.0 : static_cast<double>(truth_detected) / (truth_detected + missed);
}

double DetectionTally::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

DetectionTally& DetectionTally::operator+=(const DetectionTally& o) {
  tp += o.tp;
  fp += o.fp;
  truth_detected += o.truth_detected;
  missed += o.missed;
  pairs.insert(pairs.end(), o.pairs.begin(), o.pairs.end());
  return *this;
}

DetectionTally detection_metrics(const std::vector<Region>& predicted, const std::vector<Region>& truth,
                                 double min_overlap_frac) {
  if (!(min_overlap_frac >= 0.0 && min_overlap_frac < 1.0)) {
    throw ValidationError("min_overlap_frac must be in [0, 1)");
  }
  DetectionTally t;
  std::vector<Box> tb;
  for (const auto& r : truth) tb.push_back(region_bounds(r));
  std::vector<bool> detected(truth.size(), false);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const Box pb = region_bounds(predicted[i]);
    PolygonSet near;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (!pb.intersects(tb[j])) continue;
      const double a = geomesh::intersection_area(predicted[i], truth[j]);
      if (a > 0.0) {
        t.pairs.push_back({i, j, a});
        detected[j] = true;
        near.insert(near.end(), truth[j].begin(), truth[j].end());
      }
    }
    const double overlap = near.empty() ? 0.0 : geomesh::intersection_area(predicted[i], near);
    if (overlap > 0.0 && overlap > min_overlap_frac * region_area(predicted[i])) {
      ++t.tp;
    } else {
      ++t.fp;
    }
  }
  for (bool d : detected) {
    if (d) {
      ++t.truth_detected;
    } else {
      ++t.missed;
    }
  }
  return t;
}

double PixelCounts::iou() const { return union_ == 0 ? 1.0 : static_cast<double>(intersection) / union_; }

double PixelCounts::dice() const {
  return predicted + truth == 0 ? 1.0 : 2.0 * static_cast<double>(intersection) / (predicted + truth);
}

PixelCounts& PixelCounts::operator+=(const PixelCounts& o) {
  intersection += o.intersection;
  union_ += o.union_;
  predicted += o.predicted;
  truth += o.truth;
  return *this;
}

namespace {

PixelCounts count_masks(const geomesh::BinaryMask& p, const geomesh::BinaryMask& t, const geomesh::BinaryMask* within) {
  const auto c = geomesh::overlap_counts(p, t, within);
  return {c.intersection, c.union_, c.a, c.b};
}

}  // namespace

PixelCounts pixel_counts(const PolygonSet& predicted, const PolygonSet& truth, const geomesh::Frame& frame,
                         const geomesh::BinaryMask* within) {
  if (within && !within->frame().same_geometry(frame)) throw FrameMismatch("segmentation IoU: sample mask frame differs");
  const auto p = geomesh::rasterize(predicted, frame, geomesh::OutsidePolicy::Skip);
  const auto t = geomesh::rasterize(truth, frame, geomesh::OutsidePolicy::Skip);
  return count_masks(p, t, within);
}

double segmentation_iou(const PolygonSet& predicted, const PolygonSet& truth, const geomesh::Frame& frame,
                        const geomesh::BinaryMask* within) {
  return pixel_counts(predicted, truth, frame, within).iou();
}

double segmentation_iou(const geomesh::BinaryMask& predicted, const geomesh::BinaryMask& truth,
                        const geomesh::BinaryMask* within) {
  return count_masks(predicted, truth, within).iou();
}

Metrics Metrics::from(const DetectionTally& t, const PixelCounts& px) {
  Metrics m;
  m.tally = t;
  m.pixels = px;
  m.precision = t.precision();
  m.recall = t.recall();
  m.f1 = t.f1();
  m.iou = px.iou();
  return m;
}

nlohmann::json Metrics::to_json() const {
  return {{"precision", precision},
          {"recall", recall},
          {"f1", f1},
          {"iou", iou},
          {"tp", tally.tp},
          {"fp", tally.fp},
          {"truth_detected", tally.truth_detected},
          {"missed", tally.missed},
          {"intersection_px", pixels.intersection},
          {"union_px", pixels.union_}};
}

namespace {

std::vector<Region> clip_regions(const PolygonSet& polys, const PolygonSet& area) {
  const Box ab = bounds_of_set(area);
  std::vector<Region> out;
  for (const auto& p : polys) {
    if (!p.bounds().intersects(ab)) continue;
    PolygonSet parts = geomesh::intersection_of({p}, area);
    if (!parts.empty()) out.push_back(std::move(parts));
  }
  return out;
}

}  // namespace

CityEvaluation evaluate_city(const std::string& city_id, const std::string& stratum, const PolygonSet& predicted,
                             const PolygonSet& truth, const std::vector<HexCell>& sampled_cells,
                             const geomesh::Frame& frame) {
  CityEvaluation e;
  e.city_id = city_id;
  e.stratum = stratum;
  if (sampled_cells.empty()) return e;
  const PolygonSet area = geomesh::intersection_of(footprint(sampled_cells), {geomesh::box_polygon(frame.bounds())});
  if (area.empty()) return e;
  e.sample_area_m2 = geomesh::total_area(area);
  e.predicted = clip_regions(predicted, area);
  e.truth = clip_regions(truth, area);
  const auto within = geomesh::rasterize(area, frame, geomesh::OutsidePolicy::Skip);
  e.pixels = pixel_counts(predicted, truth, frame, &within);
  return e;
}

AssessmentReport assess(const std::vector<CityEvaluation>& cities, double min_overlap_frac) {
  AssessmentReport rep;
  rep.min_overlap_frac = min_overlap_frac;
  std::set<double> levels(kSensitivityLevels.begin(), kSensitivityLevels.end());
  levels.insert(min_overlap_frac);

  std::map<double, DetectionTally> pooled;
  std::map<std::string, std::pair<DetectionTally, PixelCounts>> strata;
  PixelCounts pixels;
  CompensatedSum area;
  for (const auto& c : cities) {
    for (double level : levels) {
      DetectionTally t = detection_metrics(c.predicted, c.truth, level);
      if (level == min_overlap_frac) {
        rep.cities[c.city_id] = Metrics::from(t, c.pixels);
        auto& s = strata[c.stratum];
        s.first += t;
        s.second += c.pixels;
      }
      pooled[level] += t;
    }
    pixels += c.pixels;
    area.add(c.sample_area_m2);
  }
  rep.overall = Metrics::from(pooled[min_overlap_frac], pixels);
  for (double level : levels) rep.sensitivity[level] = Metrics::from(pooled[level], pixels);
  for (const auto& [k, v] : strata) rep.strata[k] = Metrics::from(v.first, v.second);
  rep.sample_area_km2 = area.value() / 1e6;
  return rep;
}

nlohmann::json AssessmentReport::to_json() const {
  nlohmann::json j;
  j["overall"] = overall.to_json();
  j["strata"] = nlohmann::json::object();
  for (const auto& [k, m] : strata) j["strata"][k] = m.to_json();
  j["cities"] = nlohmann::json::object();
  for (const auto& [k, m] : cities) j["cities"][k] = m.to_json();
  j["sensitivity"] = nlohmann::json::array();
  for (const auto& [level, m] : sensitivity) {
    auto row = m.to_json();
    row["min_overlap_frac"] = level;
    j["sensitivity"].push_back(row);
  }
  j["min_overlap_frac"] = min_overlap_frac;
  j["sample_area_km2"] = sample_area_km2;
  j["iou_pooling"] = "pooled";
  return j;
}

namespace {

std::string metrics_line(const std::string& scope, const std::string& key, const Metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-16s %9.4f %9.4f %9.4f %9.4f %6zu %6zu %8zu %6zu\n", scope.c_str(), key.c_str(),
                m.precision, m.recall, m.f1, m.iou, m.tally.tp, m.tally.fp, m.tally.truth_detected, m.tally.missed);
  return buf;
}

const char* kHeader = "scope        key              precision    recall        f1       iou     tp     fp detected missed\n";

}  // namespace

std::string AssessmentReport::to_table() const {
  std::string out = kHeader;
  out += metrics_line("overall", "pooled", overall);
  for (const auto& [k, m] : strata) out += metrics_line("stratum", k, m);
  for (const auto& [k, m] : cities) out += metrics_line("city", k, m);
  for (const auto& [level, m] : sensitivity) {
    char key[32];
    std::snprintf(key, sizeof key, "overlap>%.2f", level);
    out += metrics_line("sensitivity", key, m);
  }
  char tail[64];
  std::snprintf(tail, sizeof tail, "sample area: %.4f km2\n", sample_area_km2);
  return out + tail;
}

std::vector<ProductRow> compare_products(const std::vector<Product>& products, const PolygonSet& truth,
                                         const geomesh::Frame& frame, const PolygonSet* sample_area,
                                         double min_overlap_frac) {
  if (products.size() < 2) throw ValidationError("compare_products: need at least two products");
  PolygonSet overlap{geomesh::box_polygon(frame.bounds())};
  for (const auto& p : products) {
    if (p.coverage) overlap = geomesh::intersection_of(overlap, *p.coverage);
  }
  if (sample_area) overlap = geomesh::intersection_of(overlap, *sample_area);
  if (overlap.empty() || !(geomesh::total_area(overlap) > 0.0)) {
    throw ValidationError("compare_products: products share no coverage");
  }
  const auto within = geomesh::rasterize(overlap, frame, geomesh::OutsidePolicy::Skip);
  const auto truth_regions = clip_regions(truth, overlap);
  std::vector<ProductRow> rows;
  for (const auto& p : products) {
    const auto t = detection_metrics(clip_regions(p.regions, overlap), truth_regions, min_overlap_frac);
    rows.push_back({p.name, Metrics::from(t, pixel_counts(p.regions, truth, frame, &within))});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ProductRow& a, const ProductRow& b) {
    if (a.metrics.f1 != b.metrics.f1) return a.metrics.f1 > b.metrics.f1;
    return a.name < b.name;
  });
  return rows;
}

nlohmann::json comparison_json(const std::vector<ProductRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    auto m = r.metrics.to_json();
    m["product"] = r.name;
    j.push_back(m);
  }
  return j;
}

std::string comparison_table(const std::vector<ProductRow>& rows) {
  std::string out = kHeader;
  for (const auto& r : rows) out += metrics_line("product", r.name, r.metrics);
  return out;
}

}  // namespace uvkit::assess
