#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uvkit/geomesh/polygon.hpp"

namespace uvkit::geomesh {

// Ramer-Douglas-Peucker on an open chain. Keeps both endpoints; every dropped
// vertex lies within `epsilon` of the segment that replaced it.
std::vector<Point> simplify_chain(std::span<const Point> chain, double epsilon);

// Indices (ascending) of the vertices simplify_chain keeps.
std::vector<std::size_t> simplify_chain_indices(std::span<const Point> chain, double epsilon);

// Closed-ring RDP: the ring is split at its two mutually farthest vertices and
// each half simplified as a chain. The result is a subsequence of the input in
// original order with at least 3 vertices. Throws GeometryError for fewer than
// 3 vertices or a non-positive epsilon.
Ring simplify_ring(std::span<const Point> ring, double epsilon);
std::vector<std::size_t> simplify_ring_indices(std::span<const Point> ring, double epsilon);

// The diametral pair (i < j) of a point set, ties broken by lowest indices.
std::pair<std::size_t, std::size_t> farthest_pair(std::span<const Point> pts);

}  // namespace uvkit::geomesh
