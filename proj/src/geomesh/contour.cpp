#include "uvkit/geomesh/contour.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "uvkit/error.hpp"

namespace uvkit::geomesh {

namespace {

struct Edge {
  std::int64_t from;
  std::int64_t to;
  std::int32_t owner;  // pixel index of the foreground pixel this side belongs to
};

struct Loop {
  std::vector<std::int64_t> vertices;  // corner ids
  std::int32_t owner;
};

// Keeps only turning vertices of an axis-aligned loop in corner-index space.
std::vector<std::int64_t> drop_collinear(const std::vector<std::int64_t>& loop, std::int64_t stride) {
  const std::size_t n = loop.size();
  std::vector<std::int64_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t p = loop[(i + n - 1) % n], c = loop[i], q = loop[(i + 1) % n];
    const std::int64_t d1x = c % stride - p % stride, d1y = c / stride - p / stride;
    const std::int64_t d2x = q % stride - c % stride, d2y = q / stride - c / stride;
    if (d1x * d2y - d1y * d2x != 0) out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<RegionPolygon> vectorize(const BinaryMask& mask) {
  const Frame& f = mask.frame();
  const int w = f.width, h = f.height;
  const std::int64_t stride = w + 1;
  auto vid = [stride](int cx, int cy) { return static_cast<std::int64_t>(cy) * stride + cx; };

  // Directed boundary edges, counter-clockwise around foreground in world
  // coordinates (north-up), i.e. foreground on the left.
  std::vector<Edge> edges;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask.at(c, r)) continue;
      const std::int32_t owner = r * w + c;
      if (!mask.get(c - 1, r)) edges.push_back({vid(c, r), vid(c, r + 1), owner});
      if (!mask.get(c, r + 1)) edges.push_back({vid(c, r + 1), vid(c + 1, r + 1), owner});
      if (!mask.get(c + 1, r)) edges.push_back({vid(c + 1, r + 1), vid(c + 1, r), owner});
      if (!mask.get(c, r - 1)) edges.push_back({vid(c + 1, r), vid(c, r), owner});
    }
  }
  if (edges.empty()) return {};

  const std::size_t nverts = static_cast<std::size_t>(stride) * static_cast<std::size_t>(h + 1);
  std::vector<std::array<std::int32_t, 2>> out(nverts, {-1, -1});
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto& slot = out[static_cast<std::size_t>(edges[e].from)];
    (slot[0] < 0 ? slot[0] : slot[1]) = static_cast<std::int32_t>(e);
  }

  std::vector<std::uint8_t> used(edges.size(), 0);
  std::vector<std::int32_t> position(nverts, -1);
  std::vector<Loop> loops;
  std::vector<std::int64_t> path;
  std::vector<std::int32_t> path_owner;

  auto emit = [&](std::size_t from_index) {
    Loop l;
    l.owner = path_owner[from_index];
    l.vertices.assign(path.begin() + static_cast<std::ptrdiff_t>(from_index), path.end());
    loops.push_back(std::move(l));
  };

  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (used[start]) continue;
    path.clear();
    path_owner.clear();
    std::size_t e = start;
    while (!used[e]) {
      used[e] = 1;
      const std::int64_t v = edges[e].from;
      const std::int32_t seen = position[static_cast<std::size_t>(v)];
      if (seen >= 0) {
        // Pinch point: peel off the closed sub-loop that started at v.
        const std::size_t k = static_cast<std::size_t>(seen);
        emit(k);
        for (std::size_t i = k + 1; i < path.size(); ++i) position[static_cast<std::size_t>(path[i])] = -1;
        path.resize(k + 1);
        path_owner.resize(k + 1);
        path_owner[k] = edges[e].owner;
      } else {
        position[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(path.size());
        path.push_back(v);
        path_owner.push_back(edges[e].owner);
      }
      // At a saddle two edges leave the vertex; stay on the same pixel so the
      // contour hugs foreground and diagonal neighbours stay apart.
      const auto& slot = out[static_cast<std::size_t>(edges[e].to)];
      std::size_t next = static_cast<std::size_t>(slot[0]);
      if (slot[1] >= 0) {
        const auto a = static_cast<std::size_t>(slot[0]);
        const auto b = static_cast<std::size_t>(slot[1]);
        if (edges[a].owner == edges[e].owner) {
          next = a;
        } else if (edges[b].owner == edges[e].owner) {
          next = b;
        } else {
          next = used[a] ? b : a;
        }
      }
      e = next;
    }
    emit(0);
    for (std::int64_t v : path) position[static_cast<std::size_t>(v)] = -1;
  }

  const LabeledComponents cc = connected_components(mask);
  struct Traced {
    Ring ring;
    double area;
  };
  std::vector<std::vector<Traced>> exteriors(static_cast<std::size_t>(cc.count));
  std::vector<std::pair<std::int32_t, Ring>> orphan_holes;

  for (const Loop& l : loops) {
    const std::vector<std::int64_t> corners = drop_collinear(l.vertices, stride);
    if (corners.size() < 4) continue;
    Ring ring;
    ring.reserve(corners.size());
    for (std::int64_t v : corners) {
      ring.push_back(f.corner(static_cast<double>(v % stride), static_cast<double>(v / stride)));
    }
    const double a = signed_area(ring);
    const std::int32_t label = cc.labels[static_cast<std::size_t>(l.owner)];
    const auto slot = static_cast<std::size_t>(label - 1);
    if (a > 0) {
      exteriors[slot].push_back({std::move(ring), a});
    } else {
      orphan_holes.emplace_back(label, std::move(ring));
    }
  }

  // Holes go to the tightest enclosing outer loop of their own component.
  std::vector<std::vector<std::vector<Ring>>> assigned(exteriors.size());
  for (std::size_t k = 0; k < exteriors.size(); ++k) assigned[k].resize(exteriors[k].size());
  for (auto& [label, ring] : orphan_holes) {
    const auto slot = static_cast<std::size_t>(label - 1);
    if (exteriors[slot].empty()) continue;
    std::size_t best = 0;
    if (exteriors[slot].size() > 1) {
      // Center of the background pixel to the right of the first hole edge.
      const Point a = ring[0], b = ring[1];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      const Point dir{(b.x - a.x) / len, (b.y - a.y) / len};
      const Point right{dir.y, -dir.x};
      const double half = 0.5 * f.resolution;
      const Point probe = a + dir * half + right * half;
      double best_area = -1;
      for (std::size_t i = 0; i < exteriors[slot].size(); ++i) {
        const Traced& t = exteriors[slot][i];
        if (point_in_ring(probe, t.ring) && (best_area < 0 || t.area < best_area)) {
          best = i;
          best_area = t.area;
        }
      }
    }
    assigned[slot][best].push_back(std::move(ring));
  }

  std::vector<RegionPolygon> polys;
  polys.reserve(static_cast<std::size_t>(cc.count));
  for (std::size_t k = 0; k < exteriors.size(); ++k) {
    for (std::size_t i = 0; i < exteriors[k].size(); ++i) {
      polys.emplace_back(std::move(exteriors[k][i].ring), std::move(assigned[k][i]));
    }
  }
  return polys;
}

namespace {

struct ScanEdge {
  Point a;
  Point b;
  int first_row;
};

void rasterize_into(const RegionPolygon& poly, const Frame& f, std::vector<std::uint8_t>& data,
                    OutsidePolicy policy) {
  const Box pb = poly.bounds();
  const Box fb = f.bounds();
  if (!pb.intersects(fb)) {
    if (policy == OutsidePolicy::Reject) throw GeometryError("polygon lies entirely outside the frame");
    return;
  }
  const int w = f.width, h = f.height;
  const double res = f.resolution;
  const int row_lo = std::max(0, static_cast<int>(std::floor((f.origin.y - pb.max_y) / res - 0.5)));
  const int row_hi = std::min(h - 1, static_cast<int>(std::ceil((f.origin.y - pb.min_y) / res - 0.5)));
  if (row_lo > row_hi) return;

  std::vector<ScanEdge> edges;
  auto collect = [&](const Ring& r) {
    const std::size_t n = r.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      if (r[i].y == r[j].y) continue;
      const double top = std::max(r[i].y, r[j].y);
      const int first = std::max(row_lo, static_cast<int>(std::floor((f.origin.y - top) / res - 0.5)));
      edges.push_back({r[j], r[i], first});
    }
  };
  collect(poly.exterior());
  for (const Ring& hole : poly.holes()) collect(hole);
  std::sort(edges.begin(), edges.end(),
            [](const ScanEdge& x, const ScanEdge& y) { return x.first_row < y.first_row; });

  std::vector<const ScanEdge*> active;
  std::vector<double> xs;
  std::size_t next = 0;
  for (int row = row_lo; row <= row_hi; ++row) {
    while (next < edges.size() && edges[next].first_row <= row) active.push_back(&edges[next++]);
    const double yc = f.origin.y - (row + 0.5) * res;
    xs.clear();
    std::size_t keep = 0;
    for (const ScanEdge* e : active) {
      const double lo = std::min(e->a.y, e->b.y);
      if (lo > yc + res) continue;  // edge entirely below this row: retire
      active[keep++] = e;
      if ((e->a.y > yc) != (e->b.y > yc)) {
        xs.push_back(e->a.x + (yc - e->a.y) * (e->b.x - e->a.x) / (e->b.y - e->a.y));
      }
    }
    active.resize(keep);
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int c0 = std::max(0, static_cast<int>(std::ceil((xs[k] - f.origin.x) / res - 0.5)));
      const int c1 = std::min(w, static_cast<int>(std::ceil((xs[k + 1] - f.origin.x) / res - 0.5)));
      std::uint8_t* line = data.data() + static_cast<std::size_t>(row) * w;
      for (int c = c0; c < c1; ++c) line[c] = 1;
    }
  }
}

}  // namespace

BinaryMask rasterize(const std::vector<RegionPolygon>& polys, const Frame& frame, OutsidePolicy policy) {
  frame.validate();
  std::vector<std::uint8_t> data(frame.size(), 0);
  for (const RegionPolygon& p : polys) rasterize_into(p, frame, data, policy);
  return BinaryMask(frame, std::move(data));
}

BinaryMask rasterize(const RegionPolygon& poly, const Frame& frame, OutsidePolicy policy) {
  return rasterize(std::vector<RegionPolygon>{poly}, frame, policy);
}

}  // namespace uvkit::geomesh
