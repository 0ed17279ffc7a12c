#pragma once

#include <cstdint>

#include "uvkit/geomesh/mask.hpp"

namespace uvkit::geomesh {

// Square structuring element of side 2*radius+1. Pixels outside the frame
// count as background, so erosion eats into shapes touching the frame edge.
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask dilate(const BinaryMask& mask, int radius);

// Erosion followed by dilation. Throws ValidationError for radius < 1.
BinaryMask morphological_open(const BinaryMask& mask, int radius);

// Removes 4-connected components with fewer than min_area pixels.
BinaryMask drop_small_components(const BinaryMask& mask, std::int64_t min_area);

}  // namespace uvkit::geomesh
