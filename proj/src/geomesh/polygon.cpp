#include "uvkit/geomesh/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uvkit/error.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::geomesh {

// Shoelace terms are taken relative to the first vertex so large projected
// coordinates do not cancel catastrophically.
double signed_area(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  const Point o = ring[0];
  CompensatedSum acc;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Point a = ring[i] - o;
    const Point b = ring[i + 1] - o;
    acc.add(a.x * b.y - b.x * a.y);
  }
  return 0.5 * acc.value();
}

Point ring_centroid(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  const Point o = ring[0];
  CompensatedSum a2, cx, cy;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Point a = ring[i] - o;
    const Point b = ring[i + 1] - o;
    const double cross = a.x * b.y - b.x * a.y;
    a2.add(cross);
    cx.add((a.x + b.x) * cross);
    cy.add((a.y + b.y) * cross);
  }
  const double twice = a2.value();
  if (twice == 0.0) {
    Point mean{};
    for (const Point& p : ring) mean = mean + (p - o);
    return o + mean * (1.0 / static_cast<double>(n));
  }
  return {o.x + cx.value() / (3.0 * twice), o.y + cy.value() / (3.0 * twice)};
}

Box bounds_of(std::span<const Point> ring) {
  Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Point& p : ring) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

bool point_in_ring(Point p, std::span<const Point> ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  const double ex = p.x - (a.x + t * dx);
  const double ey = p.y - (a.y + t * dy);
  return std::hypot(ex, ey);
}

namespace {

int orient(Point a, Point b, Point c) {
  const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return (v > 0) - (v < 0);
}

bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(Point a, Point b, Point c, Point d) {
  const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

bool is_simple(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = ring[i], b = ring[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point c = ring[j], d = ring[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex only: reject a fold-back along the same line.
        const Point shared = (j == i + 1) ? b : a;
        const Point other_ab = (j == i + 1) ? a : b;
        const Point other_cd = (j == i + 1) ? d : c;
        if (orient(other_ab, shared, other_cd) == 0) {
          const double dot = (other_ab.x - shared.x) * (other_cd.x - shared.x) +
                             (other_ab.y - shared.y) * (other_cd.y - shared.y);
          if (dot > 0) return false;
        }
        continue;
      }
      if (segments_touch(a, b, c, d)) return false;
    }
  }
  return true;
}

RegionPolygon::RegionPolygon(Ring exterior, std::vector<Ring> holes)
    : exterior_(std::move(exterior)), holes_(std::move(holes)) {
  if (exterior_.size() >= 2 && exterior_.front() == exterior_.back()) exterior_.pop_back();
  if (exterior_.size() < 3) throw GeometryError("polygon exterior needs at least 3 vertices");
  for (const Point& p : exterior_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GeometryError("non-finite vertex");
  }
  double outer = signed_area(exterior_);
  if (outer < 0) {
    std::reverse(exterior_.begin(), exterior_.end());
    outer = -outer;
  }
  double net = outer;
  for (Ring& h : holes_) {
    if (h.size() >= 2 && h.front() == h.back()) h.pop_back();
    if (h.size() < 3) throw GeometryError("polygon hole needs at least 3 vertices");
    double a = signed_area(h);
    if (a > 0) {
      std::reverse(h.begin(), h.end());
      a = -a;
    }
    net += a;
  }
  if (!(net > 0.0)) throw GeometryError("polygon has zero area");
  area_ = net;
  bounds_ = bounds_of(std::span<const Point>(exterior_));
}

Point RegionPolygon::centroid() const {
  // Weighted by signed ring areas; holes carry negative weight.
  const Point o = exterior_[0];
  auto shifted = [&](const Ring& r) {
    Ring s;
    s.reserve(r.size());
    for (const Point& p : r) s.push_back(p - o);
    return s;
  };
  const Ring ext = shifted(exterior_);
  const double ae = signed_area(ext);
  const Point ce = ring_centroid(ext);
  double sx = ce.x * ae, sy = ce.y * ae, sa = ae;
  for (const Ring& h : holes_) {
    const Ring hs = shifted(h);
    const double ah = signed_area(hs);
    const Point ch = ring_centroid(hs);
    sx += ch.x * ah;
    sy += ch.y * ah;
    sa += ah;
  }
  return {o.x + sx / sa, o.y + sy / sa};
}

bool RegionPolygon::contains(Point p) const {
  if (!bounds_.contains(p)) return false;
  if (!point_in_ring(p, exterior_)) return false;
  for (const Ring& h : holes_) {
    if (point_in_ring(p, h)) return false;
  }
  return true;
}

double RegionPolygon::distance_to_boundary(Point p) const {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](const Ring& r) {
    const std::size_t n = r.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      best = std::min(best, point_segment_distance(p, r[j], r[i]));
    }
  };
  scan(exterior_);
  for (const Ring& h : holes_) scan(h);
  return best;
}

double RegionPolygon::signed_distance(Point p) const {
  const double d = distance_to_boundary(p);
  return contains(p) ? d : -d;
}

std::size_t RegionPolygon::vertex_count() const noexcept {
  std::size_t n = exterior_.size();
  for (const Ring& h : holes_) n += h.size();
  return n;
}

RegionPolygon RegionPolygon::translated(Point offset) const {
  auto shift = [&](const Ring& r) {
    Ring s;
    s.reserve(r.size());
    for (const Point& p : r) s.push_back(p + offset);
    return s;
  };
  std::vector<Ring> holes;
  holes.reserve(holes_.size());
  for (const Ring& h : holes_) holes.push_back(shift(h));
  return RegionPolygon(shift(exterior_), std::move(holes));
}

double total_area(std::span<const RegionPolygon> polys) {
  CompensatedSum s;
  for (const RegionPolygon& p : polys) s.add(p.area());
  return s.value();
}

Box bounds_of(std::span<const RegionPolygon> polys) {
  Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const RegionPolygon& p : polys) {
    const Box& pb = p.bounds();
    b.min_x = std::min(b.min_x, pb.min_x);
    b.min_y = std::min(b.min_y, pb.min_y);
    b.max_x = std::max(b.max_x, pb.max_x);
    b.max_y = std::max(b.max_y, pb.max_y);
  }
  return b;
}

}  // namespace uvkit::geomesh
