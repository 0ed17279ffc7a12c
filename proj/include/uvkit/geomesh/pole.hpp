#pragma once

#include "uvkit/geomesh/polygon.hpp"

namespace uvkit::geomesh {

struct Pole {
  Point point;
  double clearance = 0.0;  // distance from `point` to the nearest boundary
};

// Pole of inaccessibility by quadtree cell subdivision: cells are split while
// they could still hold a point more than `precision` better than the best
// found so far. The answer is within `precision` of the true maximum
// inscribed-circle radius. Throws GeometryError for non-positive precision.
Pole pole_of_inaccessibility(const RegionPolygon& poly, double precision);

}  // namespace uvkit::geomesh
