#pragma once

// Polygon booleans and pairwise overlap resolution between region polygons.
//
// Intersection and difference run on Clipper2's integer engine. Operands are
// scaled by a power of two so the larger coordinate magnitude lands near 2^50,
// which keeps the rounding error around 1e-15 of the extent.
// The winner/loser rule that makes regions exclusive lives here.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <clipper2/clipper.h>

#include "spothull/core_model.hpp"
#include "spothull/geometry.hpp"
#include "spothull/regions.hpp"

namespace spothull::polygon_ops {

using geometry::Polygon;
using regions::RegionPolygon;

namespace detail {

namespace c2 = Clipper2Lib;

inline double max_abs_coordinate(const Polygon& p) {
  double m = 0.0;
  for (const auto& v : p.exterior) m = std::max({m, std::abs(v.x), std::abs(v.y)});
  for (const auto& h : p.holes) {
    for (const auto& v : h) m = std::max({m, std::abs(v.x), std::abs(v.y)});
  }
  return m;
}

inline double integer_scale(const Polygon& a, const Polygon& b) {
  const double m = std::max(max_abs_coordinate(a), max_abs_coordinate(b));
  if (!(m > 0.0) || !std::isfinite(m)) return 1.0;
  int exp = 0;
  std::frexp(m, &exp);  // m < 2^exp
  return std::ldexp(1.0, 50 - exp);
}

inline c2::Path64 to_path(const geometry::Ring& ring, double scale) {
  c2::Path64 path;
  path.reserve(ring.size());
  for (const auto& v : ring) path.emplace_back(std::llround(v.x * scale), std::llround(v.y * scale));
  return path;
}

inline c2::Paths64 to_paths(const Polygon& p, double scale) {
  c2::Paths64 paths;
  paths.push_back(to_path(p.exterior, scale));
  for (const auto& h : p.holes) paths.push_back(to_path(h, scale));
  return paths;
}

inline geometry::Ring from_path(const c2::Path64& path, double inv) {
  geometry::Ring ring;
  ring.reserve(path.size());
  for (const auto& v : path) ring.push_back({static_cast<double>(v.x) * inv, static_cast<double>(v.y) * inv});
  return ring;
}

// Outer node: its children are holes, and their children are nested outers.
inline void collect(const c2::PolyPath64& outer, double inv, double eps_area, std::vector<Polygon>& out) {
  Polygon p;
  p.exterior = from_path(outer.Polygon(), inv);
  if (p.exterior.size() < 3 || std::abs(geometry::signed_area(p.exterior)) <= eps_area) return;
  for (const auto& hole : outer) {
    geometry::Ring h = from_path(hole->Polygon(), inv);
    if (h.size() >= 3 && std::abs(geometry::signed_area(h)) > eps_area) p.holes.push_back(std::move(h));
    for (const auto& island : *hole) collect(*island, inv, eps_area, out);
  }
  geometry::orient(p);
  out.push_back(std::move(p));
}

inline std::vector<Polygon> boolean_op(c2::ClipType op, const Polygon& a, const Polygon& b, double eps_area) {
  const double scale = integer_scale(a, b);
  c2::Clipper64 clipper;
  clipper.AddSubject(to_paths(a, scale));
  clipper.AddClip(to_paths(b, scale));
  c2::PolyTree64 tree;
  if (!clipper.Execute(op, c2::FillRule::NonZero, tree)) throw GeometryError("polygon boolean operation failed");
  std::vector<Polygon> out;
  for (const auto& outer : tree) collect(*outer, 1.0 / scale, eps_area, out);
  return out;
}

}  // namespace detail

inline double total_area(std::span<const Polygon> polys) {
  double a = 0.0;
  for (const auto& p : polys) a += geometry::area(p);
  return a;
}

/// Sliver threshold relative to the combined bounding box of the operands.
inline double default_eps_area(const Polygon& a, const Polygon& b) {
  std::vector<Point> pts = a.exterior;
  pts.insert(pts.end(), b.exterior.begin(), b.exterior.end());
  return 1e-9 * geometry::bounding_box(pts).area();
}

inline std::vector<Polygon> intersect(const Polygon& a, const Polygon& b, double eps_area) {
  return detail::boolean_op(detail::c2::ClipType::Intersection, a, b, eps_area);
}

inline std::vector<Polygon> intersect(const Polygon& a, const Polygon& b) {
  return intersect(a, b, default_eps_area(a, b));
}

/// a minus b.
inline std::vector<Polygon> subtract(const Polygon& a, const Polygon& b, double eps_area) {
  return detail::boolean_op(detail::c2::ClipType::Difference, a, b, eps_area);
}

inline std::vector<Polygon> subtract(const Polygon& a, const Polygon& b) {
  return subtract(a, b, default_eps_area(a, b));
}

/// Cheap reject before running the overlay.
inline bool boxes_overlap(const Polygon& a, const Polygon& b) {
  const auto ra = geometry::bounding_box(a), rb = geometry::bounding_box(b);
  return ra.min_x <= rb.max_x && rb.min_x <= ra.max_x && ra.min_y <= rb.max_y && rb.min_y <= ra.max_y;
}

// -----------------------------------------------------------------------------
// Overlap resolution
// -----------------------------------------------------------------------------

struct OverlapRecord {
  std::string region_a;
  std::string region_b;
  double intersection_area = 0.0;
  std::size_t count_a = 0;  // spots in the intersection labeled with a's cluster
  std::size_t count_b = 0;
  std::string loser;
};

struct ResolveOptions {
  double eps_area = 0.0;  // 0 selects 1e-9 x dataset bounding-box area
  double eps_geom = 0.0;  // 0 selects 1e-9 x dataset bounding-box diagonal
};

struct ResolveResult {
  std::vector<RegionPolygon> regions;
  std::vector<OverlapRecord> overlaps;
};

/// Makes regions pairwise exclusive. Pairs are visited in list order; for an
/// overlapping pair the region with fewer of its own-cluster spots inside the
/// intersection gives up the shared area. Equal counts: the smaller polygon
/// loses, then the later region. Split results stay in place with ids
/// suffixed ".0", ".1", ...; fully consumed regions are dropped.
inline ResolveResult resolve_overlaps(std::vector<RegionPolygon> regions, std::span<const Point> positions,
                                      std::span<const int> labels, const ResolveOptions& opt = {}) {
  if (positions.size() != labels.size()) throw Error("resolve_overlaps: positions and labels differ in length");

  std::vector<Point> extent(positions.begin(), positions.end());
  for (const auto& r : regions) extent.insert(extent.end(), r.polygon.exterior.begin(), r.polygon.exterior.end());
  const geometry::Rect bbox = geometry::bounding_box(extent);
  const double eps_area = opt.eps_area > 0 ? opt.eps_area : 1e-9 * bbox.area();
  const double eps_geom = opt.eps_geom > 0 ? opt.eps_geom : geometry::geometric_epsilon(bbox);

  ResolveResult result;
  const std::size_t pair_budget = std::max<std::size_t>(1, regions.size() * (regions.size() - (regions.empty() ? 0 : 1)) / 2);
  const std::size_t max_steps = 10 * pair_budget;
  std::size_t steps = 0;

  // Polygons only ever shrink, so a pair once found disjoint stays disjoint.
  std::set<std::pair<std::string, std::string>> disjoint;

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < regions.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < regions.size() && !changed; ++j) {
        RegionPolygon& a = regions[i];
        RegionPolygon& b = regions[j];
        if (disjoint.contains({a.id, b.id})) continue;
        if (!boxes_overlap(a.polygon, b.polygon)) {
          disjoint.insert({a.id, b.id});
          continue;
        }
        const std::vector<Polygon> shared = intersect(a.polygon, b.polygon, eps_area);
        const double shared_area = total_area(shared);
        if (shared_area <= eps_area) {
          disjoint.insert({a.id, b.id});
          continue;
        }

        if (++steps > max_steps) throw Error("resolve_overlaps: iteration guard exceeded (clipping defect)");

        OverlapRecord rec;
        rec.region_a = a.id;
        rec.region_b = b.id;
        rec.intersection_area = shared_area;
        for (std::size_t s = 0; s < positions.size(); ++s) {
          if (labels[s] != a.cluster && labels[s] != b.cluster) continue;
          const bool inside = std::any_of(shared.begin(), shared.end(),
                                          [&](const Polygon& p) { return geometry::covers(p, positions[s], eps_geom); });
          if (!inside) continue;
          if (labels[s] == a.cluster) ++rec.count_a;
          if (labels[s] == b.cluster) ++rec.count_b;
        }

        bool a_loses;
        if (rec.count_a != rec.count_b) {
          a_loses = rec.count_a < rec.count_b;
        } else {
          const double area_a = geometry::area(a.polygon), area_b = geometry::area(b.polygon);
          a_loses = area_a != area_b ? area_a < area_b : false;  // equal areas: the later region (b) loses
        }
        const std::size_t loser_pos = a_loses ? i : j;
        const std::size_t winner_pos = a_loses ? j : i;
        rec.loser = regions[loser_pos].id;

        std::vector<Polygon> remaining = subtract(regions[loser_pos].polygon, regions[winner_pos].polygon, eps_area);
        RegionPolygon loser = std::move(regions[loser_pos]);
        regions.erase(regions.begin() + static_cast<std::ptrdiff_t>(loser_pos));
        std::vector<RegionPolygon> parts;
        for (std::size_t c = 0; c < remaining.size(); ++c) {
          RegionPolygon part = loser;
          part.polygon = std::move(remaining[c]);
          if (remaining.size() > 1) part.id = loser.id + "." + std::to_string(c);
          parts.push_back(std::move(part));
        }
        regions.insert(regions.begin() + static_cast<std::ptrdiff_t>(loser_pos), parts.begin(), parts.end());

        result.overlaps.push_back(std::move(rec));
        changed = true;
      }
    }
  }

  // Member counts now describe what each final polygon actually covers.
  for (auto& r : regions) {
    std::size_t count = 0;
    for (std::size_t s = 0; s < positions.size(); ++s) {
      if (labels[s] == r.cluster && geometry::covers(r.polygon, positions[s], eps_geom)) ++count;
    }
    r.member_count = count;
  }
  result.regions = std::move(regions);
  return result;
}

}  // namespace spothull::polygon_ops
