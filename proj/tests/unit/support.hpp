#pragma once

// Shared generators and brute-force oracles for the unit and acceptance suites.
// Nothing here calls into the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "uvkit/geomesh.hpp"

namespace uvkit::testing {

using geomesh::BinaryMask;
using geomesh::Frame;
using geomesh::Point;

inline Frame unit_frame(int w, int h, double res = 1.0, Point origin = {0.0, 0.0}) {
  return Frame{w, h, origin, res};
}

// Salt-and-pepper noise at the given density.
inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density, double res = 1.0) {
  std::bernoulli_distribution bit(density);
  BinaryMask m(unit_frame(w, h, res, {100.0, 5000.0}));
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) m.set(c, r, bit(rng));
  return m;
}

// Union of random axis-aligned rectangles and discs: blobby, with holes and
// diagonal contacts now and then.
inline BinaryMask random_blobs(std::mt19937_64& rng, int w, int h, int count, double res = 1.0) {
  BinaryMask m(unit_frame(w, h, res, {-250.0, 900.0}));
  std::uniform_int_distribution<int> cx(0, w - 1), cy(0, h - 1);
  std::uniform_int_distribution<int> size(1, std::max(2, std::min(w, h) / 4));
  std::bernoulli_distribution disc(0.5), carve(0.25);
  for (int k = 0; k < count; ++k) {
    const int x = cx(rng), y = cy(rng), s = size(rng), t = size(rng);
    const bool value = !carve(rng);
    const bool round = disc(rng);
    for (int r = std::max(0, y - t); r < std::min(h, y + t); ++r) {
      for (int c = std::max(0, x - s); c < std::min(w, x + s); ++c) {
        if (round) {
          const double dx = (c - x) / static_cast<double>(s), dy = (r - y) / static_cast<double>(t);
          if (dx * dx + dy * dy > 1.0) continue;
        }
        m.set(c, r, value);
      }
    }
  }
  return m;
}

// Erosion/dilation straight from the definition, background outside the frame.
inline BinaryMask naive_erode(const BinaryMask& m, int radius) {
  BinaryMask out(m.frame());
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c) {
      bool all = true;
      for (int dr = -radius; dr <= radius && all; ++dr)
        for (int dc = -radius; dc <= radius && all; ++dc) all = m.get(c + dc, r + dr);
      out.set(c, r, all);
    }
  return out;
}

inline BinaryMask naive_dilate(const BinaryMask& m, int radius) {
  BinaryMask out(m.frame());
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c) {
      bool any = false;
      for (int dr = -radius; dr <= radius && !any; ++dr)
        for (int dc = -radius; dc <= radius && !any; ++dc) any = m.get(c + dc, r + dr);
      out.set(c, r, any);
    }
  return out;
}

// BFS flood fill returning per-component pixel counts in discovery order.
inline std::vector<std::int64_t> flood_fill_areas(const BinaryMask& m) {
  std::vector<std::uint8_t> seen(m.data().size(), 0);
  std::vector<std::int64_t> areas;
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * m.width() + c;
      if (!m.at(c, r) || seen[i]) continue;
      std::deque<std::pair<int, int>> q{{c, r}};
      seen[i] = 1;
      std::int64_t n = 0;
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        ++n;
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = x + dx[k], ny = y + dy[k];
          if (!m.get(nx, ny)) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * m.width() + nx;
          if (!seen[j]) {
            seen[j] = 1;
            q.emplace_back(nx, ny);
          }
        }
      }
      areas.push_back(n);
    }
  return areas;
}

inline double seg_dist(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double l2 = vx * vx + vy * vy;
  double t = l2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / l2 : 0.0;
  t = t < 0 ? 0 : (t > 1 ? 1 : t);
  return std::hypot(p.x - a.x - t * vx, p.y - a.y - t * vy);
}

// Crossing-number test over every ring, written independently of the library.
inline bool oracle_inside(const geomesh::RegionPolygon& poly, Point p) {
  auto crossings = [&](const geomesh::Ring& ring) {
    int n = 0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Point a = ring[i], b = ring[(i + 1) % ring.size()];
      if ((a.y <= p.y && b.y > p.y) || (b.y <= p.y && a.y > p.y)) {
        const double x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (x > p.x) ++n;
      }
    }
    return n;
  };
  int total = crossings(poly.exterior());
  for (const auto& h : poly.holes()) total += crossings(h);
  return total % 2 == 1;
}

inline double oracle_boundary_distance(const geomesh::RegionPolygon& poly, Point p) {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](const geomesh::Ring& ring) {
    for (std::size_t i = 0; i < ring.size(); ++i) best = std::min(best, seg_dist(p, ring[i], ring[(i + 1) % ring.size()]));
  };
  scan(poly.exterior());
  for (const auto& h : poly.holes()) scan(h);
  return best;
}

// Maximum inscribed-circle radius sampled on a square grid of the given
// spacing: exact boundary distance at every inside sample.
inline double brute_force_clearance(const geomesh::RegionPolygon& poly, double spacing) {
  const auto b = poly.bounds();
  double best = 0.0;
  for (double y = b.min_y + spacing / 2; y < b.max_y; y += spacing)
    for (double x = b.min_x + spacing / 2; x < b.max_x; x += spacing) {
      const Point p{x, y};
      if (oracle_inside(poly, p)) best = std::max(best, oracle_boundary_distance(poly, p));
    }
  return best;
}

// Point strictly inside some polygon: crossing test plus nonzero distance to
// every boundary.
inline bool oracle_strictly_inside_any(const std::vector<geomesh::RegionPolygon>& polys, Point p) {
  for (const auto& poly : polys)
    if (oracle_inside(poly, p) && oracle_boundary_distance(poly, p) > 1e-9) return true;
  return false;
}

inline bool oracle_strictly_outside_all(const std::vector<geomesh::RegionPolygon>& polys, Point p) {
  for (const auto& poly : polys)
    if (oracle_inside(poly, p) || oracle_boundary_distance(poly, p) <= 1e-9) return false;
  return true;
}

// Largest 4-connected component of a blob field, plus the whole field as the
// set of all regions.
struct SyntheticRegion {
  BinaryMask region;
  BinaryMask all;
};

inline SyntheticRegion random_region(std::mt19937_64& rng, int side) {
  for (;;) {
    BinaryMask field = random_blobs(rng, side, side, 6);
    const auto comps = geomesh::connected_components(field);
    if (comps.count == 0) continue;
    const auto largest = std::max_element(comps.areas.begin(), comps.areas.end()) - comps.areas.begin();
    if (comps.areas[largest] < 30) continue;
    return {comps.component_mask(static_cast<int>(largest) + 1), comps.foreground()};
  }
}

// Fresh empty directory under the system temp dir, unique per process.
inline std::filesystem::path scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const auto p = fs::temp_directory_path() / ("uvkit_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace uvkit::testing
