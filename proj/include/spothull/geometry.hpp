#pragma once

// Planar primitives shared by hull construction and polygon booleans.
//
// Conventions: rings are open (the last vertex is not repeated), orientation
// is measured with the usual shoelace sign so a positive area means
// counterclockwise in a y-up frame. Pixel space is y-down, which mirrors the
// visual sense but not the arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "spothull/core_model.hpp"

namespace spothull::geometry {

using Ring = std::vector<Point>;

struct Polygon {
  Ring exterior;            // counterclockwise
  std::vector<Ring> holes;  // clockwise

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

/// Returned by hull builders when the input cannot form a polygon.
struct DegenerateHull {
  enum class Kind { empty, point, segment, too_few_points };
  Kind kind = Kind::empty;
  std::vector<Point> points;  // distinct input points, or the two segment ends

  friend bool operator==(const DegenerateHull&, const DegenerateHull&) = default;
};

using Hull = std::variant<Polygon, DegenerateHull>;

inline bool is_polygon(const Hull& h) { return std::holds_alternative<Polygon>(h); }

struct Rect {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;

  bool contains(const Point& p) const { return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y; }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  double diagonal() const { return std::hypot(width(), height()); }
};

enum class Location { inside, boundary, outside };

// -----------------------------------------------------------------------------
// Basic measures
// -----------------------------------------------------------------------------

inline double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

inline double signed_area(std::span<const Point> ring) {
  if (ring.size() < 3) throw GeometryError("signed_area needs at least 3 vertices");
  double twice = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

/// Unsigned area of a polygon with holes.
inline double area(const Polygon& poly) {
  double a = std::abs(signed_area(poly.exterior));
  for (const auto& h : poly.holes) a -= std::abs(signed_area(h));
  return a;
}

inline Rect bounding_box(std::span<const Point> pts) {
  Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    r.min_x = std::min(r.min_x, p.x);
    r.min_y = std::min(r.min_y, p.y);
    r.max_x = std::max(r.max_x, p.x);
    r.max_y = std::max(r.max_y, p.y);
  }
  if (pts.empty()) r = Rect{};
  return r;
}

inline Rect bounding_box(const Polygon& poly) { return bounding_box(poly.exterior); }

/// Scale-invariant tolerance used for boundary and orientation decisions.
inline double geometric_epsilon(const Rect& bbox) { return 1e-9 * bbox.diagonal(); }

/// Distance from p to the closed segment ab.
inline double segment_point_distance(const Point& a, const Point& b, const Point& p) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(a, p);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(Point{a.x + t * dx, a.y + t * dy}, p);
}

inline double segment_point_squared_distance(const Point& a, const Point& b, const Point& p) {
  const double d = segment_point_distance(a, b, p);
  return d * d;
}

inline void orient(Polygon& poly) {
  if (poly.exterior.size() >= 3 && signed_area(poly.exterior) < 0) std::reverse(poly.exterior.begin(), poly.exterior.end());
  for (auto& h : poly.holes) {
    if (h.size() >= 3 && signed_area(h) > 0) std::reverse(h.begin(), h.end());
  }
}

// -----------------------------------------------------------------------------
// Segment predicates
// -----------------------------------------------------------------------------

namespace detail {

inline int sign(double v) { return (v > 0) - (v < 0); }

inline bool on_segment_collinear(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace detail

/// True when closed segments ab and cd share at least one point.
inline bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  const int o1 = detail::sign(cross(a, b, c));
  const int o2 = detail::sign(cross(a, b, d));
  const int o3 = detail::sign(cross(c, d, a));
  const int o4 = detail::sign(cross(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && detail::on_segment_collinear(a, b, c)) return true;
  if (o2 == 0 && detail::on_segment_collinear(a, b, d)) return true;
  if (o3 == 0 && detail::on_segment_collinear(c, d, a)) return true;
  if (o4 == 0 && detail::on_segment_collinear(c, d, b)) return true;
  return false;
}

/// A ring is simple when only consecutive edges meet, and only at their shared vertex.
inline bool is_simple_ring(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (ring[i] == ring[(i + 1) % n]) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point& c = ring[j];
      const Point& d = ring[(j + 1) % n];
      const bool next = j == i + 1;
      const bool prev = i == 0 && j == n - 1;
      if (next || prev) {
        // Adjacent edges: reject only a fold back along the shared line.
        const Point& shared = next ? b : a;
        const Point& u = next ? a : b;
        const Point& w = next ? d : c;
        if (cross(shared, u, w) == 0.0 &&
            ((u.x - shared.x) * (w.x - shared.x) + (u.y - shared.y) * (w.y - shared.y)) > 0.0) {
          return false;
        }
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return signed_area(ring) != 0.0;
}

// -----------------------------------------------------------------------------
// Containment
// -----------------------------------------------------------------------------

/// Even-odd ray casting over every ring; a point within eps of an edge is boundary.
inline Location point_in_polygon(const Point& p, const Polygon& poly, double eps) {
  bool inside = false;
  auto scan = [&](const Ring& ring) -> bool {
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = ring[i];
      const Point& b = ring[j];
      if (segment_point_distance(a, b, p) <= eps) return true;
      if ((a.y > p.y) != (b.y > p.y)) {
        const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (p.x < x_cross) inside = !inside;
      }
    }
    return false;
  };
  if (scan(poly.exterior)) return Location::boundary;
  for (const auto& h : poly.holes) {
    if (scan(h)) return Location::boundary;
  }
  return inside ? Location::inside : Location::outside;
}

inline Location point_in_polygon(const Point& p, const Polygon& poly) {
  return point_in_polygon(p, poly, geometric_epsilon(bounding_box(poly)));
}

inline bool covers(const Polygon& poly, const Point& p, double eps) {
  return point_in_polygon(p, poly, eps) != Location::outside;
}

// -----------------------------------------------------------------------------
// Convex hull
// -----------------------------------------------------------------------------

/// Andrew's monotone chain; collinear boundary points are dropped.
inline Hull convex_hull(std::span<const Point> input) {
  std::vector<Point> pts(input.begin(), input.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.empty()) return DegenerateHull{DegenerateHull::Kind::empty, {}};
  if (pts.size() == 1) return DegenerateHull{DegenerateHull::Kind::point, pts};

  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);

  const Rect box = bounding_box(pts);
  const double diag = box.diagonal();
  if (hull.size() < 3 || std::abs(signed_area(hull)) <= 1e-12 * diag * diag) {
    return DegenerateHull{DegenerateHull::Kind::segment, {pts.front(), pts.back()}};
  }
  return Polygon{std::move(hull), {}};
}

// -----------------------------------------------------------------------------
// Spatial index
// -----------------------------------------------------------------------------

/// Static 2-d tree over a point set. Ids are positions in the build input.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  explicit SpatialIndex(std::span<const Point> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    axis_.assign(points_.size(), 0);
    build(0, order_.size(), 0);
  }

  std::size_t size() const noexcept { return points_.size(); }
  const Point& point(std::size_t id) const { return points_[id]; }
  std::span<const Point> points() const noexcept { return points_; }

  /// Ids of all points inside the closed rectangle, ascending.
  std::vector<std::size_t> range(const Rect& rect) const {
    std::vector<std::size_t> out;
    range_impl(0, order_.size(), rect, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// The n nearest ids sorted by (distance, id).
  std::vector<std::size_t> nearest(const Point& q, std::size_t n) const {
    n = std::min(n, points_.size());
    std::vector<std::size_t> out;
    if (n == 0) return out;
    std::priority_queue<Candidate> heap;  // worst candidate on top
    nearest_impl(0, order_.size(), q, n, heap);
    out.resize(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
      out[i] = heap.top().id;
      heap.pop();
    }
    return out;
  }

 private:
  struct Candidate {
    double d2;
    std::size_t id;
    bool operator<(const Candidate& o) const { return d2 != o.d2 ? d2 < o.d2 : id < o.id; }
  };

  static double coord(const Point& p, int axis) { return axis == 0 ? p.x : p.y; }

  void build(std::size_t lo, std::size_t hi, int depth) {
    if (hi - lo <= 1) {
      if (hi > lo) axis_[lo] = 0;
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const int axis = depth % 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                       const double ca = coord(points_[a], axis), cb = coord(points_[b], axis);
                       return ca != cb ? ca < cb : a < b;
                     });
    axis_[mid] = axis;
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void range_impl(std::size_t lo, std::size_t hi, const Rect& rect, std::vector<std::size_t>& out) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t id = order_[mid];
    const Point& p = points_[id];
    if (rect.contains(p)) out.push_back(id);
    const int axis = axis_[mid];
    const double c = coord(p, axis);
    const double rmin = axis == 0 ? rect.min_x : rect.min_y;
    const double rmax = axis == 0 ? rect.max_x : rect.max_y;
    if (rmin <= c) range_impl(lo, mid, rect, out);
    if (rmax >= c) range_impl(mid + 1, hi, rect, out);
  }

  void nearest_impl(std::size_t lo, std::size_t hi, const Point& q, std::size_t n,
                    std::priority_queue<Candidate>& heap) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t id = order_[mid];
    const Point& p = points_[id];
    Candidate cand{squared_distance(p, q), id};
    if (heap.size() < n) {
      heap.push(cand);
    } else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
    const int axis = axis_[mid];
    const double diff = coord(q, axis) - coord(p, axis);
    const bool left_first = diff <= 0;
    if (left_first) nearest_impl(lo, mid, q, n, heap);
    else nearest_impl(mid + 1, hi, q, n, heap);
    // Equal distances may still win on id, so only prune strictly farther slabs.
    if (heap.size() < n || diff * diff <= heap.top().d2) {
      if (left_first) nearest_impl(mid + 1, hi, q, n, heap);
      else nearest_impl(lo, mid, q, n, heap);
    }
  }

  std::vector<Point> points_;
  std::vector<std::size_t> order_;
  std::vector<int> axis_;
};

inline SpatialIndex index_build(std::span<const Point> points) { return SpatialIndex(points); }
inline std::vector<std::size_t> index_range(const SpatialIndex& index, const Rect& rect) { return index.range(rect); }
inline std::vector<std::size_t> index_nearest(const SpatialIndex& index, const Point& q, std::size_t n) {
  return index.nearest(q, n);
}

}  // namespace spothull::geometry
