#include "uvkit/geomesh/simplify.hpp"

#include <algorithm>
#include <numeric>

#include "uvkit/error.hpp"

namespace uvkit::geomesh {

namespace {

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double dist2(Point a, Point b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Marks kept vertices of pts[first..last] (inclusive) with an explicit stack.
void rdp_mark(std::span<const Point> pts, std::size_t first, std::size_t last, double epsilon,
              std::vector<std::uint8_t>& keep) {
  keep[first] = keep[last] = 1;
  std::vector<std::pair<std::size_t, std::size_t>> todo{{first, last}};
  while (!todo.empty()) {
    const auto [a, b] = todo.back();
    todo.pop_back();
    if (b <= a + 1) continue;
    double worst = -1.0;
    std::size_t at = a;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double d = point_segment_distance(pts[i], pts[a], pts[b]);
      if (d > worst) {
        worst = d;
        at = i;
      }
    }
    if (worst > epsilon) {
      keep[at] = 1;
      todo.emplace_back(a, at);
      todo.emplace_back(at, b);
    }
  }
}

}  // namespace

std::vector<std::size_t> simplify_chain_indices(std::span<const Point> chain, double epsilon) {
  if (!(epsilon > 0.0)) throw GeometryError("simplification epsilon must be positive");
  const std::size_t n = chain.size();
  if (n <= 2) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  std::vector<std::uint8_t> keep(n, 0);
  rdp_mark(chain, 0, n - 1, epsilon, keep);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) idx.push_back(i);
  }
  return idx;
}

std::vector<Point> simplify_chain(std::span<const Point> chain, double epsilon) {
  std::vector<Point> out;
  for (std::size_t i : simplify_chain_indices(chain, epsilon)) out.push_back(chain[i]);
  return out;
}

std::pair<std::size_t, std::size_t> farthest_pair(std::span<const Point> pts) {
  const std::size_t n = pts.size();
  if (n < 2) return {0, 0};
  // The diameter is realised by hull vertices; monotone-chain hull first.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
    if (pts[a].y != pts[b].y) return pts[a].y < pts[b].y;
    return a < b;
  });
  std::vector<std::size_t> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[order[i]]) <= 0) --k;
    hull[k++] = order[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[order[i]]) <= 0) --k;
    hull[k++] = order[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  if (hull.size() < 2) hull = {order.front(), order.back()};

  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_d = -1.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      std::size_t a = hull[i], b = hull[j];
      if (a > b) std::swap(a, b);
      const double d = dist2(pts[a], pts[b]);
      if (d > best_d || (d == best_d && std::pair{a, b} < best)) {
        best_d = d;
        best = {a, b};
      }
    }
  }
  return best;
}

std::vector<std::size_t> simplify_ring_indices(std::span<const Point> ring, double epsilon) {
  if (!(epsilon > 0.0)) throw GeometryError("simplification epsilon must be positive");
  const std::size_t n = ring.size();
  if (n < 3) throw GeometryError("ring needs at least 3 vertices");
  const auto [i, j] = farthest_pair(ring);

  // Unroll the ring so both halves are contiguous chains: i..j and j..i+n.
  std::vector<Point> unrolled;
  unrolled.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) unrolled.push_back(ring[(i + k) % n]);
  const std::size_t split = j - i;
  std::vector<std::uint8_t> keep(n + 1, 0);
  rdp_mark(unrolled, 0, split, epsilon, keep);
  rdp_mark(unrolled, split, n, epsilon, keep);

  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < n; ++k) {
    if (keep[k]) idx.push_back((i + k) % n);
  }
  if (idx.size() < 3) {
    // Both halves collapsed onto the diameter: keep the vertex farthest from it.
    double worst = -1.0;
    std::size_t at = n;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      const double d = point_segment_distance(ring[k], ring[i], ring[j]);
      if (d > worst) {
        worst = d;
        at = k;
      }
    }
    if (at < n) idx.push_back(at);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

Ring simplify_ring(std::span<const Point> ring, double epsilon) {
  Ring out;
  for (std::size_t i : simplify_ring_indices(ring, epsilon)) out.push_back(ring[i]);
  return out;
}

}  // namespace uvkit::geomesh
