#include "uvkit/analytics/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "uvkit/error.hpp"
#include "uvkit/geomesh/pole.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::analytics {

using geomesh::Box;

namespace {

Box set_bounds(const PolygonSet& s) {
  Box b = s.front().bounds();
  for (const auto& p : s) {
    const Box& o = p.bounds();
    b = {std::min(b.min_x, o.min_x), std::min(b.min_y, o.min_y), std::max(b.max_x, o.max_x), std::max(b.max_y, o.max_y)};
  }
  return b;
}

// Inside or on the boundary of some part.
const RegionPolygon* part_containing(const PolygonSet& parts, Point p) {
  for (const auto& part : parts) {
    if (part.contains(p) || part.distance_to_boundary(p) <= 1e-9) return &part;
  }
  return nullptr;
}

}  // namespace

void CityRecord::validate() const {
  if (gub.empty() || !(geomesh::total_area(gub) > 0.0)) {
    throw ValidationError("city '" + city_id + "': GUB has no area");
  }
  for (std::size_t i = 0; i < uv_regions.size(); ++i) {
    if (!(geomesh::intersection_area(uv_regions[i], gub) > 0.0)) {
      throw ValidationError("city '" + city_id + "': UV region " + std::to_string(i) + " lies outside the GUB");
    }
  }
}

double uv_area_in_gub(const CityRecord& city) {
  if (city.uv_regions.empty()) return 0.0;
  return geomesh::intersection_area(geomesh::union_of(city.uv_regions), city.gub);
}

double uv_proportion(const CityRecord& city) {
  const double g = geomesh::union_area(city.gub);
  if (!(g > 0.0)) throw ValidationError("city '" + city.city_id + "': GUB has no area");
  return std::clamp(uv_area_in_gub(city) / g, 0.0, 1.0);
}

Regression ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("regression: x and y differ in length");
  if (x.size() < 3) throw ValidationError("regression: need at least 3 points");
  const double n = static_cast<double>(x.size());
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / n, my = sy.value() / n;
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx.add(dx * dx);
    sxy.add(dx * dy);
    syy.add(dy * dy);
  }
  if (!(sxx.value() > 0.0)) throw ValidationError("regression: independent variable has zero variance");
  Regression r;
  r.slope = sxy.value() / sxx.value();
  r.intercept = my - r.slope * mx;
  CompensatedSum ss_res;
  r.residuals.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.residuals[i] = y[i] - (r.intercept + r.slope * x[i]);
    ss_res.add(r.residuals[i] * r.residuals[i]);
  }
  const double ss_tot = syy.value();
  r.r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res.value() / ss_tot, 0.0, 1.0) : 0.0;
  r.residual_rank.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.residual_rank[i] = i;
  std::stable_sort(r.residual_rank.begin(), r.residual_rank.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(r.residuals[a]) > std::abs(r.residuals[b]);
  });
  return r;
}

Regression built_up_regression(const std::vector<CityRecord>& cities) {
  std::vector<double> x, y;
  for (const auto& c : cities) {
    x.push_back(geomesh::union_area(c.gub) / 1e6);
    y.push_back(uv_area_in_gub(c) / 1e6);
  }
  return ols(x, y);
}

std::string to_string(Pattern p) { return p == Pattern::Peripheral ? "Peripheral" : "Mosaic"; }

PeripheryResult periphery_index(const CityRecord& city, double precision) {
  if (!(precision > 0.0)) throw ValidationError("periphery_index: precision must be positive");
  if (city.uv_regions.empty()) throw ValidationError("city '" + city.city_id + "': periphery index needs UV regions");
  if (city.gub.empty()) throw ValidationError("city '" + city.city_id + "': empty GUB");

  // Work relative to the GUB corner so results do not depend on where the city sits.
  const Box b = set_bounds(city.gub);
  const Point shift{-b.min_x, -b.min_y};
  PolygonSet gub;
  for (const auto& p : city.gub) gub.push_back(p.translated(shift));

  PeripheryResult res;
  for (const auto& part : gub) {
    res.pia_distance_m = std::max(res.pia_distance_m, geomesh::pole_of_inaccessibility(part, precision).clearance);
  }
  if (!(res.pia_distance_m > precision)) {
    throw ValidationError("city '" + city.city_id + "': GUB too thin for its pole clearance");
  }

  CompensatedSum weighted, weights;
  for (std::size_t i = 0; i < city.uv_regions.size(); ++i) {
    const RegionPolygon uv = city.uv_regions[i].translated(shift);
    UvDistance d;
    d.region = i;
    d.area_m2 = uv.area();
    d.anchor = uv.centroid();
    if (!part_containing(gub, d.anchor)) {
      d.anchor = geomesh::pole_of_inaccessibility(uv, precision).point;
      d.anchor_is_centroid = false;
    }
    if (const RegionPolygon* part = part_containing(gub, d.anchor)) d.distance_m = part->distance_to_boundary(d.anchor);
    d.normalized = std::min(1.0, d.distance_m / res.pia_distance_m);
    d.anchor = d.anchor - shift;
    weighted.add(d.area_m2 * d.normalized);
    weights.add(d.area_m2);
    res.per_uv.push_back(d);
  }
  res.city_index = std::clamp(weighted.value() / weights.value(), 0.0, 1.0);
  return res;
}

std::map<std::string, Pattern> classify_pattern(const std::map<std::string, double>& indices) {
  std::map<std::string, Pattern> out;
  if (indices.empty()) return out;
  CompensatedSum s;
  double lo = indices.begin()->second, hi = lo;
  for (const auto& [k, v] : indices) {
    s.add(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Rounding must not push the mean outside the data, or equal inputs would split.
  const double mean = std::clamp(s.value() / static_cast<double>(indices.size()), lo, hi);
  for (const auto& [k, v] : indices) out[k] = v <= mean ? Pattern::Peripheral : Pattern::Mosaic;
  return out;
}

ZoneStats& ZoneStats::operator+=(const ZoneStats& o) {
  present = present || o.present;
  count += o.count;
  height_sum_m += o.height_sum_m;
  footprint_area_m2 += o.footprint_area_m2;
  zone_area_m2 += o.zone_area_m2;
  return *this;
}

std::optional<double> BuildingStats::height_ratio() const {
  if (!uv.present || !non_uv.present || !(non_uv.mean_height_m() > 0.0)) return std::nullopt;
  return uv.mean_height_m() / non_uv.mean_height_m();
}

std::optional<double> BuildingStats::bcr_ratio() const {
  if (!(non_uv.bcr() > 0.0) || !(uv.zone_area_m2 > 0.0)) return std::nullopt;
  return uv.bcr() / non_uv.bcr();
}

namespace {

nlohmann::json zone_json(const ZoneStats& z) {
  return {{"present", z.present},
          {"count", z.count},
          {"mean_height_m", z.present ? nlohmann::json(z.mean_height_m()) : nlohmann::json(nullptr)},
          {"bcr", z.bcr()},
          {"zone_area_m2", z.zone_area_m2}};
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json BuildingStats::to_json() const {
  return {{"uv", zone_json(uv)}, {"non_uv", zone_json(non_uv)}, {"height_ratio", opt(height_ratio())},
          {"bcr_ratio", opt(bcr_ratio())}};
}

BuildingStats building_stats(const CityRecord& city, const std::vector<Building>& buildings, Assignment rule) {
  const PolygonSet uv_zone = city.uv_regions.empty() ? PolygonSet{}
                                                     : geomesh::intersection_of(geomesh::union_of(city.uv_regions), city.gub);
  BuildingStats s;
  const double gub_area = geomesh::union_area(city.gub);
  s.uv.zone_area_m2 = geomesh::total_area(uv_zone);
  s.non_uv.zone_area_m2 = std::max(0.0, gub_area - s.uv.zone_area_m2);

  for (const auto& b : buildings) {
    if (!(b.height_m >= 0.0) || !std::isfinite(b.height_m)) {
      throw ValidationError("city '" + city.city_id + "': building height must be a non-negative number");
    }
    const double in_gub = geomesh::intersection_area(b.footprint, city.gub);
    const double in_uv = uv_zone.empty() ? 0.0 : geomesh::intersection_area(b.footprint, uv_zone);
    s.uv.footprint_area_m2 += in_uv;
    s.non_uv.footprint_area_m2 += std::max(0.0, in_gub - in_uv);

    bool is_uv = false;
    bool considered = false;
    if (rule == Assignment::Centroid) {
      const Point c = b.footprint.centroid();
      is_uv = std::any_of(city.uv_regions.begin(), city.uv_regions.end(), [&](const auto& u) { return u.contains(c); });
      considered = is_uv || std::any_of(city.gub.begin(), city.gub.end(), [&](const auto& g) { return g.contains(c); });
    } else {
      is_uv = in_uv > 0.5 * b.footprint.area();
      considered = in_gub > 0.5 * b.footprint.area();
    }
    if (!considered) continue;
    ZoneStats& z = is_uv ? s.uv : s.non_uv;
    z.present = true;
    ++z.count;
    z.height_sum_m += b.height_m;
  }
  return s;
}

CityAnalysis analyze_city(const CityRecord& city, const std::vector<Building>* buildings, double precision,
                          Assignment rule) {
  city.validate();
  CityAnalysis a;
  a.city_id = city.city_id;
  a.region_key = city.region_key;
  a.gub_km2 = geomesh::union_area(city.gub) / 1e6;
  a.uv_km2 = uv_area_in_gub(city) / 1e6;
  a.proportion = uv_proportion(city);
  if (!city.uv_regions.empty()) a.periphery = periphery_index(city, precision);
  if (buildings) a.buildings = building_stats(city, *buildings, rule);
  return a;
}

void classify(std::vector<CityAnalysis>& cities) {
  std::map<std::string, double> idx;
  for (const auto& c : cities)
    if (c.periphery) idx[c.city_id] = c.periphery->city_index;
  const auto patterns = classify_pattern(idx);
  for (auto& c : cities)
    if (c.periphery) c.periphery->pattern = patterns.at(c.city_id);
}

std::string csv_header() {
  return "city_id,gub_km2,uv_km2,proportion,periphery_index,pattern,mean_height_uv,mean_height_nonuv,bcr_uv,bcr_nonuv\n";
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string csv_row(const CityAnalysis& c) {
  std::string row = c.city_id + "," + num(c.gub_km2) + "," + num(c.uv_km2) + "," + num(c.proportion) + ",";
  if (c.periphery) {
    row += num(c.periphery->city_index) + "," + (c.periphery->pattern ? to_string(*c.periphery->pattern) : "");
  } else {
    row += ",";
  }
  if (c.buildings) {
    const auto& b = *c.buildings;
    row += "," + (b.uv.present ? num(b.uv.mean_height_m()) : "") + "," +
           (b.non_uv.present ? num(b.non_uv.mean_height_m()) : "") + "," + num(b.uv.bcr()) + "," + num(b.non_uv.bcr());
  } else {
    row += ",,,,";
  }
  return row + "\n";
}

nlohmann::json summary_json(const std::vector<CityAnalysis>& cities, const std::vector<CityRecord>& records) {
  nlohmann::json j;
  j["cities"] = cities.size();
  if (records.size() >= 3) {
    try {
      const auto r = built_up_regression(records);
      nlohmann::json ranking = nlohmann::json::array();
      for (std::size_t i : r.residual_rank) ranking.push_back({{"city_id", records[i].city_id}, {"residual_km2", r.residuals[i]}});
      j["regression"] = {{"slope", r.slope}, {"intercept", r.intercept}, {"r2", r.r2}, {"residual_ranking", ranking}};
    } catch (const ValidationError& e) {
      j["regression"] = {{"error", e.what()}};
    }
  } else {
    j["regression"] = nullptr;
  }
  std::map<std::string, BuildingStats> by_region;
  CompensatedSum proportion;
  std::size_t peripheral = 0, mosaic = 0;
  for (const auto& c : cities) {
    proportion.add(c.proportion);
    if (c.periphery && c.periphery->pattern) (*c.periphery->pattern == Pattern::Peripheral ? peripheral : mosaic)++;
    if (!c.buildings) continue;
    auto& agg = by_region[c.region_key];
    agg.uv += c.buildings->uv;
    agg.non_uv += c.buildings->non_uv;
  }
  j["mean_proportion"] = cities.empty() ? 0.0 : proportion.value() / static_cast<double>(cities.size());
  j["patterns"] = {{"Peripheral", peripheral}, {"Mosaic", mosaic}};
  j["buildings_by_region"] = nlohmann::json::object();
  for (const auto& [k, v] : by_region) j["buildings_by_region"][k] = v.to_json();
  return j;
}

}  // namespace uvkit::analytics
