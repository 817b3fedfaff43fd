#pragma once

// Spatial grouping of same-label spots and concave hull polygonization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "spothull/core_model.hpp"
#include "spothull/geometry.hpp"

namespace spothull::regions {

using geometry::DegenerateHull;
using geometry::Hull;
using geometry::Polygon;

struct NeighborGraph {
  std::vector<std::vector<std::size_t>> adjacency;  // ascending neighbor indices
  double radius = 0.0;

  std::size_t size() const noexcept { return adjacency.size(); }
};

struct SpotGroup {
  int cluster = 0;
  std::vector<std::size_t> members;  // ascending spot indices
  std::vector<Point> positions;
};

struct RegionPolygon {
  std::string id;
  int cluster = 0;
  Polygon polygon;
  std::size_t source_group = 0;
  std::size_t member_count = 0;
};

struct HullOptions {
  double concavity = 2.0;
  double length_threshold = 0.0;
  std::size_t min_region_size = 5;
};

// -----------------------------------------------------------------------------
// Neighbor graph
// -----------------------------------------------------------------------------

/// Median distance from each point to its nearest distinct neighbor.
inline double median_nearest_neighbor_distance(const geometry::SpatialIndex& index) {
  std::vector<double> nn;
  nn.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto near = index.nearest(index.point(i), 2);
    for (std::size_t j : near) {
      if (j != i) {
        nn.push_back(geometry::distance(index.point(i), index.point(j)));
        break;
      }
    }
  }
  std::sort(nn.begin(), nn.end());
  const std::size_t n = nn.size();
  return n % 2 == 1 ? nn[n / 2] : 0.5 * (nn[n / 2 - 1] + nn[n / 2]);
}

/// Connects spots closer than radius_factor times the median nearest-neighbor distance.
inline NeighborGraph build_neighbor_graph(std::span<const Point> positions, double radius_factor) {
  if (positions.size() < 2) throw GeometryError("neighbor graph needs at least 2 spots");
  if (!(radius_factor > 0.0)) throw GeometryError("radius factor must be positive");
  if (std::all_of(positions.begin(), positions.end(), [&](const Point& p) { return p == positions.front(); })) {
    throw GeometryError("all spot positions are identical");
  }

  const geometry::SpatialIndex index(positions);
  NeighborGraph graph;
  graph.radius = radius_factor * median_nearest_neighbor_distance(index);
  graph.adjacency.resize(positions.size());
  const double r = graph.radius;
  const double r2 = r * r;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Point& p = positions[i];
    for (std::size_t j : index.range({p.x - r, p.y - r, p.x + r, p.y + r})) {
      if (j != i && geometry::squared_distance(p, positions[j]) <= r2) graph.adjacency[i].push_back(j);
    }
  }
  return graph;
}

// -----------------------------------------------------------------------------
// Components
// -----------------------------------------------------------------------------

/// Connected components over edges whose endpoints share a label, ordered by
/// (cluster, smallest member).
inline std::vector<SpotGroup> same_label_components(const NeighborGraph& graph, std::span<const int> labels,
                                                    std::span<const Point> positions) {
  if (labels.size() != graph.size() || positions.size() != graph.size()) {
    throw Error("same_label_components: labels/positions do not match the graph");
  }
  const std::size_t n = graph.size();
  std::vector<bool> seen(n, false);
  std::vector<SpotGroup> groups;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    SpotGroup g;
    g.cluster = labels[start];
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      g.members.push_back(u);
      for (std::size_t v : graph.adjacency[u]) {
        if (!seen[v] && labels[v] == g.cluster) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    std::sort(g.members.begin(), g.members.end());
    for (std::size_t m : g.members) g.positions.push_back(positions[m]);
    groups.push_back(std::move(g));
  }
  std::stable_sort(groups.begin(), groups.end(), [](const SpotGroup& a, const SpotGroup& b) {
    return a.cluster != b.cluster ? a.cluster < b.cluster : a.members.front() < b.members.front();
  });
  return groups;
}

// -----------------------------------------------------------------------------
// Concave hull
// -----------------------------------------------------------------------------

namespace detail {

/// Doubly linked hull ring; vertices refer to input point indices.
struct HullRing {
  std::vector<std::size_t> point;  // node -> input index
  std::vector<std::size_t> next;
  std::vector<std::size_t> prev;
  std::size_t head = 0;

  std::size_t insert_after(std::size_t node, std::size_t input_index) {
    const std::size_t id = point.size();
    point.push_back(input_index);
    const std::size_t after = next[node];
    next.push_back(after);
    prev.push_back(node);
    next[node] = id;
    prev[after] = id;
    return id;
  }
};

inline bool crosses_ring(const HullRing& ring, std::span<const Point> pts, std::size_t from_node, const Point& p,
                         std::size_t skip_a, std::size_t skip_b) {
  const Point& q = pts[ring.point[from_node]];
  std::size_t node = ring.head;
  do {
    const std::size_t nxt = ring.next[node];
    // Edges touching the endpoint being connected share a vertex legitimately.
    if (node != skip_a && node != skip_b && node != from_node && nxt != from_node) {
      if (geometry::segments_intersect(q, p, pts[ring.point[node]], pts[ring.point[nxt]])) return true;
    }
    node = nxt;
  } while (node != ring.head);
  return false;
}

}  // namespace detail

/// Convex-hull-seeded edge digging. The longest remaining edge (a, b) is
/// replaced by (a, p), (p, b) where p is the closest interior point to the
/// edge that is no farther from it than from either neighboring edge and whose new
/// edges cross nothing, provided min(|pa|, |pb|) < |ab| / concavity.
/// Falls back to the convex hull if the dug ring is not simple or drops a
/// point; `fell_back` reports that.
inline Hull concave_hull(std::span<const Point> pts, const HullOptions& opt = {}, bool* fell_back = nullptr) {
  if (fell_back) *fell_back = false;
  if (pts.size() < opt.min_region_size) {
    return DegenerateHull{DegenerateHull::Kind::too_few_points, std::vector<Point>(pts.begin(), pts.end())};
  }
  Hull convex = geometry::convex_hull(pts);
  if (!geometry::is_polygon(convex)) return convex;
  if (!(opt.concavity < std::numeric_limits<double>::infinity())) return convex;

  const Polygon& convex_poly = std::get<Polygon>(convex);

  // Map hull vertices back to the lowest input index holding that coordinate.
  std::vector<std::size_t> by_coord(pts.size());
  std::iota(by_coord.begin(), by_coord.end(), std::size_t{0});
  std::stable_sort(by_coord.begin(), by_coord.end(), [&](std::size_t a, std::size_t b) { return pts[a] < pts[b]; });
  auto first_index_of = [&](const Point& p) {
    auto it = std::lower_bound(by_coord.begin(), by_coord.end(), p,
                               [&](std::size_t idx, const Point& v) { return pts[idx] < v; });
    return *it;
  };

  // Points already on the ring, including duplicates of ring coordinates.
  std::vector<bool> used(pts.size(), false);
  detail::HullRing ring;
  const std::size_t hn = convex_poly.exterior.size();
  for (std::size_t i = 0; i < hn; ++i) {
    const std::size_t idx = first_index_of(convex_poly.exterior[i]);
    ring.point.push_back(idx);
    ring.next.push_back((i + 1) % hn);
    ring.prev.push_back((i + hn - 1) % hn);
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t node = 0; node < hn; ++node) {
      if (pts[i] == pts[ring.point[node]]) used[i] = true;
    }
  }

  const geometry::SpatialIndex index(pts);

  struct Edge {
    double length2;
    std::size_t seq;
    std::size_t from;
    std::size_t to;
    bool operator<(const Edge& o) const { return length2 != o.length2 ? length2 < o.length2 : seq > o.seq; }
  };
  std::priority_queue<Edge> queue;
  std::size_t seq = 0;
  auto push_edge = [&](std::size_t from) {
    const std::size_t to = ring.next[from];
    queue.push({geometry::squared_distance(pts[ring.point[from]], pts[ring.point[to]]), seq++, from, to});
  };
  for (std::size_t node = 0; node < hn; ++node) push_edge(node);

  const double threshold2 = opt.length_threshold * opt.length_threshold;
  const double concavity2 = opt.concavity * opt.concavity;
  while (!queue.empty()) {
    const Edge e = queue.top();
    queue.pop();
    if (ring.next[e.from] != e.to) continue;  // stale
    if (e.length2 <= threshold2) continue;

    const Point& a = pts[ring.point[e.from]];
    const Point& b = pts[ring.point[e.to]];
    const Point& before = pts[ring.point[ring.prev[e.from]]];
    const Point& after = pts[ring.point[ring.next[e.to]]];
    const double max_dist2 = e.length2 / concavity2;
    const double reach = std::sqrt(max_dist2);

    // Only points within `reach` of the edge can satisfy the endpoint test.
    const geometry::Rect box{std::min(a.x, b.x) - reach, std::min(a.y, b.y) - reach, std::max(a.x, b.x) + reach,
                             std::max(a.y, b.y) + reach};
    struct Cand {
      double d2;
      std::size_t idx;
    };
    std::vector<Cand> cands;
    for (std::size_t idx : index.range(box)) {
      if (used[idx]) continue;
      const double d2 = geometry::segment_point_squared_distance(a, b, pts[idx]);
      if (d2 <= max_dist2) cands.push_back({d2, idx});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
      return x.d2 != y.d2 ? x.d2 < y.d2 : x.idx < y.idx;
    });

    std::optional<std::size_t> chosen;
    for (const Cand& c : cands) {
      const Point& p = pts[c.idx];
      // Ties allowed: on regular lattices wall points are equidistant to both edges.
      if (!(c.d2 <= geometry::segment_point_squared_distance(before, a, p) &&
            c.d2 <= geometry::segment_point_squared_distance(b, after, p))) {
        continue;
      }
      if (detail::crosses_ring(ring, pts, e.from, p, e.from, ring.prev[e.from]) ||
          detail::crosses_ring(ring, pts, e.to, p, e.from, e.to)) {
        continue;
      }
      chosen = c.idx;
      break;
    }
    if (!chosen) continue;
    const Point& p = pts[*chosen];
    if (std::min(geometry::squared_distance(p, a), geometry::squared_distance(p, b)) >= max_dist2) continue;

    const std::size_t node = ring.insert_after(e.from, *chosen);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!used[i] && pts[i] == p) used[i] = true;
    }
    push_edge(e.from);
    push_edge(node);
  }

  Polygon poly;
  std::size_t node = ring.head;
  do {
    poly.exterior.push_back(pts[ring.point[node]]);
    node = ring.next[node];
  } while (node != ring.head);

  const double eps = geometry::geometric_epsilon(geometry::bounding_box(pts));
  bool sound = geometry::is_simple_ring(poly.exterior) && geometry::signed_area(poly.exterior) > 0.0;
  for (std::size_t i = 0; sound && i < pts.size(); ++i) sound = geometry::covers(poly, pts[i], eps);
  if (!sound) {
    if (fell_back) *fell_back = true;
    return convex;
  }
  return poly;
}

// -----------------------------------------------------------------------------
// Regions from groups
// -----------------------------------------------------------------------------

struct RegionBuildResult {
  std::vector<RegionPolygon> regions;
  std::vector<std::string> warnings;
};

/// One region per group that yields a proper polygon; region ids are r0, r1, ...
/// in group order.
inline RegionBuildResult build_regions(const std::vector<SpotGroup>& groups, const HullOptions& opt) {
  RegionBuildResult out;
  std::size_t next_id = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    bool fell_back = false;
    Hull hull = concave_hull(groups[g].positions, opt, &fell_back);
    if (fell_back) {
      out.warnings.push_back("group " + std::to_string(g) + " (cluster " + std::to_string(groups[g].cluster) +
                             "): concave hull failed the simplicity check; using the convex hull");
    }
    if (!geometry::is_polygon(hull)) continue;
    RegionPolygon r;
    r.id = "r" + std::to_string(next_id++);
    r.cluster = groups[g].cluster;
    r.polygon = std::move(std::get<Polygon>(hull));
    r.source_group = g;
    r.member_count = groups[g].members.size();
    out.regions.push_back(std::move(r));
  }
  return out;
}

}  // namespace spothull::regions
