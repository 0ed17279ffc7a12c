#pragma once

#include <vector>

#include "uvkit/geomesh/polygon.hpp"

namespace uvkit::geomesh {

// Polygon boolean operations on sets of polygons treated as their union.
// Output polygons are valid RegionPolygons; slivers below 1e-9 m^2 are dropped.
using PolygonSet = std::vector<RegionPolygon>;

PolygonSet union_of(const PolygonSet& polys);
PolygonSet intersection_of(const PolygonSet& a, const PolygonSet& b);
PolygonSet difference_of(const PolygonSet& a, const PolygonSet& b);

double intersection_area(const RegionPolygon& a, const RegionPolygon& b);
double intersection_area(const RegionPolygon& a, const PolygonSet& b);
double intersection_area(const PolygonSet& a, const PolygonSet& b);
// Area of the union (overlaps counted once).
double union_area(const PolygonSet& polys);

RegionPolygon box_polygon(const Box& b);

}  // namespace uvkit::geomesh
