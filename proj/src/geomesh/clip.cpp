#include "uvkit/geomesh/clip.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include "uvkit/error.hpp"

namespace uvkit::geomesh {

namespace bg = boost::geometry;

namespace {

using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, /*clockwise=*/false, /*closed=*/true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

constexpr double kSliver = 1e-9;

void fill_ring(const Ring& in, BPolygon::ring_type& out) {
  out.clear();
  out.reserve(in.size() + 1);
  for (const Point& p : in) out.emplace_back(p.x, p.y);
  out.emplace_back(in.front().x, in.front().y);
}

BPolygon to_boost(const RegionPolygon& p) {
  BPolygon out;
  fill_ring(p.exterior(), out.outer());
  for (const Ring& h : p.holes()) {
    out.inners().emplace_back();
    fill_ring(h, out.inners().back());
  }
  bg::correct(out);
  return out;
}

BMulti to_boost(const PolygonSet& set) {
  BMulti out;
  for (const RegionPolygon& p : set) {
    BMulti merged;
    bg::union_(out, to_boost(p), merged);
    out = std::move(merged);
  }
  return out;
}

Ring from_boost(const BPolygon::ring_type& r) {
  Ring out;
  out.reserve(r.size());
  for (const BPoint& p : r) out.push_back({p.x(), p.y()});
  if (out.size() > 1 && out.front() == out.back()) out.pop_back();
  return out;
}

PolygonSet from_boost(const BMulti& m) {
  PolygonSet out;
  for (const BPolygon& p : m) {
    if (std::abs(bg::area(p)) <= kSliver) continue;
    Ring ext = from_boost(p.outer());
    if (ext.size() < 3) continue;
    std::vector<Ring> holes;
    for (const auto& h : p.inners()) {
      Ring hr = from_boost(h);
      if (hr.size() >= 3 && std::abs(signed_area(hr)) > kSliver) holes.push_back(std::move(hr));
    }
    try {
      out.emplace_back(std::move(ext), std::move(holes));
    } catch (const GeometryError&) {
      // sliver that survived the area filter
    }
  }
  return out;
}

}  // namespace

PolygonSet union_of(const PolygonSet& polys) { return from_boost(to_boost(polys)); }

PolygonSet intersection_of(const PolygonSet& a, const PolygonSet& b) {
  BMulti out;
  bg::intersection(to_boost(a), to_boost(b), out);
  return from_boost(out);
}

PolygonSet difference_of(const PolygonSet& a, const PolygonSet& b) {
  BMulti out;
  bg::difference(to_boost(a), to_boost(b), out);
  return from_boost(out);
}

double intersection_area(const RegionPolygon& a, const RegionPolygon& b) {
  if (!a.bounds().intersects(b.bounds())) return 0.0;
  BMulti out;
  bg::intersection(to_boost(a), to_boost(b), out);
  return bg::area(out);
}

double intersection_area(const RegionPolygon& a, const PolygonSet& b) {
  PolygonSet near;
  for (const RegionPolygon& p : b) {
    if (a.bounds().intersects(p.bounds())) near.push_back(p);
  }
  if (near.empty()) return 0.0;
  BMulti out;
  bg::intersection(to_boost(a), to_boost(near), out);
  return bg::area(out);
}

double intersection_area(const PolygonSet& a, const PolygonSet& b) {
  BMulti out;
  bg::intersection(to_boost(a), to_boost(b), out);
  return bg::area(out);
}

double union_area(const PolygonSet& polys) { return bg::area(to_boost(polys)); }

RegionPolygon box_polygon(const Box& b) {
  return RegionPolygon(Ring{{b.min_x, b.min_y}, {b.max_x, b.min_y}, {b.max_x, b.max_y}, {b.min_x, b.max_y}});
}

}  // namespace uvkit::geomesh
