#pragma once

#include <vector>

#include "uvkit/geomesh/mask.hpp"
#include "uvkit/geomesh/polygon.hpp"

namespace uvkit::geomesh {

// Traces pixel-boundary contours of every 4-connected foreground component.
// One polygon per component, in component-label order; holes are the
// enclosed background pockets. rasterize(vectorize(m), m.frame()) == m.
std::vector<RegionPolygon> vectorize(const BinaryMask& mask);

enum class OutsidePolicy {
  Reject,  // throw GeometryError when a polygon lies entirely outside the frame
  Skip,    // silently ignore such polygons
};

// Center-of-pixel inclusion: a pixel is set when its center lies inside any
// polygon (even-odd within each polygon, union across polygons). Pixel centers
// on a left edge count as inside, on a right edge as outside.
BinaryMask rasterize(const std::vector<RegionPolygon>& polys, const Frame& frame,
                     OutsidePolicy policy = OutsidePolicy::Reject);
BinaryMask rasterize(const RegionPolygon& poly, const Frame& frame,
                     OutsidePolicy policy = OutsidePolicy::Reject);

}  // namespace uvkit::geomesh
