#pragma once

#include <span>
#include <vector>

namespace uvkit::geomesh {

// Planar point in projected metric coordinates.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }

struct Box {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  bool contains(Point p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  bool intersects(const Box& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

// Open vertex list; the closing edge back to the first vertex is implicit.
using Ring = std::vector<Point>;

double signed_area(std::span<const Point> ring);
Point ring_centroid(std::span<const Point> ring);
Box bounds_of(std::span<const Point> ring);

// Even-odd test against one ring. Points exactly on an edge may go either way.
bool point_in_ring(Point p, std::span<const Point> ring);

double point_segment_distance(Point p, Point a, Point b);

// True when no two non-adjacent edges touch and adjacent edges meet only at
// their shared vertex. O(n^2); meant for validating external input.
bool is_simple(std::span<const Point> ring);

// A planar polygon with holes. Construction normalizes orientation (exterior
// counter-clockwise, holes clockwise) and caches the net area.
class RegionPolygon {
 public:
  // Throws GeometryError for fewer than 3 vertices or zero net area.
  explicit RegionPolygon(Ring exterior, std::vector<Ring> holes = {});

  const Ring& exterior() const noexcept { return exterior_; }
  const std::vector<Ring>& holes() const noexcept { return holes_; }
  double area() const noexcept { return area_; }
  const Box& bounds() const noexcept { return bounds_; }

  // Area centroid, holes subtracted.
  Point centroid() const;
  bool contains(Point p) const;
  // Minimum distance to any ring edge.
  double distance_to_boundary(Point p) const;
  // Positive inside, negative outside.
  double signed_distance(Point p) const;
  std::size_t vertex_count() const noexcept;

  RegionPolygon translated(Point offset) const;

 private:
  Ring exterior_;
  std::vector<Ring> holes_;
  double area_ = 0.0;
  Box bounds_;
};

inline double distance_to_boundary(Point p, const RegionPolygon& poly) {
  return poly.distance_to_boundary(p);
}

double total_area(std::span<const RegionPolygon> polys);
Box bounds_of(std::span<const RegionPolygon> polys);

}  // namespace uvkit::geomesh
