#include "uvkit/geomesh/pole.hpp"

#include <cmath>
#include <queue>
#include <vector>

#include "uvkit/error.hpp"

namespace uvkit::geomesh {

namespace {

struct Cell {
  Point center;
  double half;      // half the cell side
  double distance;  // signed distance at the center
  double potential; // upper bound on the distance anywhere in the cell

  Cell(Point c, double h, const RegionPolygon& poly)
      : center(c), half(h), distance(poly.signed_distance(c)), potential(distance + h * std::sqrt(2.0)) {}
};

struct ByPotential {
  bool operator()(const Cell& a, const Cell& b) const { return a.potential < b.potential; }
};

}  // namespace

Pole pole_of_inaccessibility(const RegionPolygon& poly, double precision) {
  if (!(precision > 0.0)) throw GeometryError("pole precision must be positive");
  if (!(poly.area() > 0.0)) throw GeometryError("degenerate polygon has no pole");

  const Box b = poly.bounds();
  const double side = std::min(b.width(), b.height());
  if (!(side > 0.0)) throw GeometryError("degenerate polygon has no pole");

  std::priority_queue<Cell, std::vector<Cell>, ByPotential> queue;
  const double h = side / 2.0;
  for (double x = b.min_x; x < b.max_x; x += side) {
    for (double y = b.min_y; y < b.max_y; y += side) {
      queue.emplace(Point{x + h, y + h}, h, poly);
    }
  }

  Cell best(poly.centroid(), 0.0, poly);
  const Cell box_center(Point{b.min_x + b.width() / 2, b.min_y + b.height() / 2}, 0.0, poly);
  if (box_center.distance > best.distance) best = box_center;

  while (!queue.empty()) {
    const Cell cell = queue.top();
    queue.pop();
    if (cell.distance > best.distance) best = cell;
    // Until an interior point is found, keep refining any cell that may hold one.
    if (cell.potential <= 0.0) continue;
    if (best.distance > 0.0 && cell.potential - best.distance <= precision) continue;
    const double q = cell.half / 2.0;
    queue.emplace(Point{cell.center.x - q, cell.center.y - q}, q, poly);
    queue.emplace(Point{cell.center.x + q, cell.center.y - q}, q, poly);
    queue.emplace(Point{cell.center.x - q, cell.center.y + q}, q, poly);
    queue.emplace(Point{cell.center.x + q, cell.center.y + q}, q, poly);
  }
  return {best.center, best.distance};
}

}  // namespace uvkit::geomesh
