#pragma once

// Spot classification against final regions, dot-plot summaries and the
// SVG / GeoJSON / summary emitters.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spothull/clustering.hpp"
#include "spothull/colorspace.hpp"
#include "spothull/core_model.hpp"
#include "spothull/geometry.hpp"
#include "spothull/polygon_ops.hpp"
#include "spothull/regions.hpp"

namespace spothull::overlay {

using geometry::Polygon;
using regions::RegionPolygon;

enum class RetainReason { uncovered, misplaced };

inline std::string_view to_string(RetainReason r) { return r == RetainReason::uncovered ? "uncovered" : "misplaced"; }

inline RetainReason parse_reason(std::string_view s) {
  if (s == "uncovered") return RetainReason::uncovered;
  if (s == "misplaced") return RetainReason::misplaced;
  throw Error("unknown retain reason '" + std::string(s) + "'");
}

struct RetainedPoint {
  std::string spot_id;
  Point position;
  int cluster = 0;
  RetainReason reason = RetainReason::uncovered;
  std::optional<std::string> region_id;  // enclosing foreign region for misplaced points
};

struct CoveredSpot {
  std::size_t spot_index = 0;
  std::string region_id;
};

struct Classification {
  std::vector<CoveredSpot> covered;
  std::vector<RetainedPoint> retained;
  std::vector<std::size_t> retained_index;  // spot index for each retained entry
};

enum class Marker { circle, square, triangle, diamond, cross, star };
inline constexpr std::array<Marker, 6> kMarkerCycle{Marker::circle,  Marker::square, Marker::triangle,
                                                   Marker::diamond, Marker::cross,  Marker::star};

inline std::string_view to_string(Marker m) {
  switch (m) {
    case Marker::circle: return "circle";
    case Marker::square: return "square";
    case Marker::triangle: return "triangle";
    case Marker::diamond: return "diamond";
    case Marker::cross: return "cross";
    case Marker::star: return "star";
  }
  return "circle";
}

inline Marker marker_for_cell_type(std::size_t type_index) { return kMarkerCycle[type_index % kMarkerCycle.size()]; }

struct DotPlotEntry {
  std::string cell_type;
  double proportion = 0.0;
  Marker marker = Marker::circle;
};

struct DotPlotSpec {
  int cluster = 0;
  std::vector<DotPlotEntry> series;
  std::vector<std::array<double, 2>> connector;  // (cell-type index, proportion), drawn dashed
  std::size_t member_count = 0;
};

struct StyleConfig {
  double stripe_angle = 45.0;
  double stripe_width = 3.0;
  double stripe_gap = 5.0;
  std::string outline_color = "#ffffff";
  double outline_width = 1.5;
  double point_radius = 3.0;
  double image_opacity = 1.0;

  void validate() const {
    if (!(stripe_width > 0) || !(stripe_gap > 0)) throw Error("style: stripe width and gap must be positive");
    if (!(outline_width > 0)) throw Error("style: outline width must be positive");
    if (!(point_radius > 0)) throw Error("style: point radius must be positive");
    if (!(image_opacity >= 0 && image_opacity <= 1)) throw Error("style: image opacity must be in [0, 1]");
    color::parse_hex(outline_color);
  }
};

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Per-spot outcome, kept for the summary and the spot endpoint.
struct SpotRecord {
  std::string id;
  Point position;
  int cluster = 0;
  std::vector<double> proportions;
  bool covered = false;
  std::optional<std::string> region_id;
  std::optional<RetainReason> reason;
};

struct OverlayDocument {
  std::vector<RegionPolygon> regions;
  std::vector<color::ColorAssignment> colors;  // indexed by cluster
  std::vector<RetainedPoint> retained_points;
  std::vector<DotPlotSpec> dotplots;
  std::vector<std::string> cell_types;
  std::vector<SpotRecord> spots;
  StyleConfig style;
  std::optional<std::string> image_ref;
  std::optional<ImageSize> image_size;
  geometry::Rect canvas;  // SVG viewBox
  Provenance provenance;
};

// -----------------------------------------------------------------------------
// Classification
// -----------------------------------------------------------------------------

/// Exclusivity precondition of classify_spots.
inline void check_exclusive(std::span<const RegionPolygon> regions, double eps_area) {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      if (!polygon_ops::boxes_overlap(regions[i].polygon, regions[j].polygon)) continue;
      const double a = polygon_ops::total_area(polygon_ops::intersect(regions[i].polygon, regions[j].polygon, eps_area));
      if (a > eps_area) {
        throw Error("classify_spots: regions " + regions[i].id + " and " + regions[j].id +
                    " overlap; overlaps must be resolved first");
      }
    }
  }
}

/// Splits spots into covered (inside or on an own-cluster region) and retained.
/// A spot on the shared edge of two regions is covered if either is its own.
inline Classification classify_spots(std::span<const RegionPolygon> regions, std::span<const std::string> ids,
                                     std::span<const Point> positions, std::span<const int> labels, double eps_geom,
                                     std::optional<double> verify_eps_area = std::nullopt) {
  if (ids.size() != positions.size() || labels.size() != positions.size()) {
    throw Error("classify_spots: ids, positions and labels differ in length");
  }
  if (verify_eps_area) check_exclusive(regions, *verify_eps_area);

  std::vector<geometry::Rect> boxes;
  boxes.reserve(regions.size());
  for (const auto& r : regions) boxes.push_back(geometry::bounding_box(r.polygon));

  Classification out;
  for (std::size_t s = 0; s < positions.size(); ++s) {
    const Point& p = positions[s];
    const RegionPolygon* own = nullptr;
    const RegionPolygon* foreign = nullptr;
    for (std::size_t r = 0; r < regions.size() && !own; ++r) {
      const auto& b = boxes[r];
      if (p.x < b.min_x - eps_geom || p.x > b.max_x + eps_geom || p.y < b.min_y - eps_geom || p.y > b.max_y + eps_geom) {
        continue;
      }
      if (!geometry::covers(regions[r].polygon, p, eps_geom)) continue;
      if (regions[r].cluster == labels[s]) own = &regions[r];
      else if (!foreign) foreign = &regions[r];
    }
    if (own) {
      out.covered.push_back({s, own->id});
    } else {
      RetainedPoint rp{ids[s], p, labels[s], foreign ? RetainReason::misplaced : RetainReason::uncovered, std::nullopt};
      if (foreign) rp.region_id = foreign->id;
      out.retained.push_back(std::move(rp));
      out.retained_index.push_back(s);
    }
  }
  return out;
}

// -----------------------------------------------------------------------------
// Dot plots
// -----------------------------------------------------------------------------

inline std::vector<DotPlotSpec> build_dotplots(const clustering::ClusterModel& model,
                                               std::span<const std::string> cell_types) {
  const auto sizes = model.cluster_sizes();
  std::vector<DotPlotSpec> out;
  out.reserve(model.centroids.size());
  for (std::size_t c = 0; c < model.centroids.size(); ++c) {
    if (model.centroids[c].size() != cell_types.size()) throw Error("build_dotplots: centroid dimension mismatch");
    DotPlotSpec spec;
    spec.cluster = static_cast<int>(c);
    spec.member_count = sizes[c];
    for (std::size_t t = 0; t < cell_types.size(); ++t) {
      spec.series.push_back({cell_types[t], model.centroids[c][t], marker_for_cell_type(t)});
      spec.connector.push_back({static_cast<double>(t), model.centroids[c][t]});
    }
    out.push_back(std::move(spec));
  }
  return out;
}

// -----------------------------------------------------------------------------
// SVG
// -----------------------------------------------------------------------------

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string num(double v) { return format_shortest(v == 0.0 ? 0.0 : v); }

inline void append_ring(std::string& d, const geometry::Ring& ring) {
  for (std::size_t i = 0; i < ring.size(); ++i) {
    d += i == 0 ? "M" : " L";
    d += num(ring[i].x) + " " + num(ring[i].y);
  }
  d += " Z";
}

inline std::string path_data(const Polygon& p) {
  std::string d;
  append_ring(d, p.exterior);
  for (const auto& h : p.holes) {
    d += " ";
    append_ring(d, h);
  }
  return d;
}

inline const color::ColorAssignment& color_of(const OverlayDocument& doc, int cluster) {
  for (const auto& c : doc.colors) {
    if (c.cluster == cluster) return c;
  }
  throw Error("overlay: no color assigned to cluster " + std::to_string(cluster));
}

}  // namespace detail

inline std::string pattern_id(int cluster) { return "stripes-c" + std::to_string(cluster); }

/// Layers bottom to top: slide image, striped regions with outlines, retained points.
inline std::string render_svg(const OverlayDocument& doc) {
  if (doc.image_ref && !doc.image_size) throw Error("render_svg: image reference without image size");
  doc.style.validate();
  using detail::num;
  const auto& st = doc.style;
  const geometry::Rect& vb = doc.canvas;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" version=\"1.1\"";
  svg += " width=\"" + num(vb.width()) + "\" height=\"" + num(vb.height()) + "\"";
  svg += " viewBox=\"" + num(vb.min_x) + " " + num(vb.min_y) + " " + num(vb.width()) + " " + num(vb.height()) + "\">\n";

  // One stripe pattern per cluster that owns a region.
  std::vector<int> used;
  for (const auto& r : doc.regions) used.push_back(r.cluster);
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  svg += "  <defs>\n";
  const double period = st.stripe_width + st.stripe_gap;
  for (int c : used) {
    svg += "    <pattern id=\"" + pattern_id(c) + "\" patternUnits=\"userSpaceOnUse\" width=\"" + num(period) +
           "\" height=\"" + num(period) + "\" patternTransform=\"rotate(" + num(st.stripe_angle) + ")\">\n";
    svg += "      <rect x=\"0\" y=\"0\" width=\"" + num(st.stripe_width) + "\" height=\"" + num(period) +
           "\" fill=\"" + detail::color_of(doc, c).hex + "\"/>\n";
    svg += "    </pattern>\n";
  }
  svg += "  </defs>\n";

  svg += "  <g id=\"image-layer\">\n";
  if (doc.image_ref) {
    svg += "    <image x=\"0\" y=\"0\" width=\"" + std::to_string(doc.image_size->width) + "\" height=\"" +
           std::to_string(doc.image_size->height) + "\" preserveAspectRatio=\"none\" opacity=\"" +
           num(st.image_opacity) + "\" xlink:href=\"" + detail::xml_escape(*doc.image_ref) + "\"/>\n";
  }
  svg += "  </g>\n";

  svg += "  <g id=\"regions\">\n";
  for (const auto& r : doc.regions) {
    svg += "    <path id=\"region-" + detail::xml_escape(r.id) + "\" data-cluster=\"" + std::to_string(r.cluster) +
           "\" d=\"" + detail::path_data(r.polygon) + "\" fill=\"url(#" + pattern_id(r.cluster) +
           ")\" fill-rule=\"evenodd\" stroke=\"" + st.outline_color + "\" stroke-width=\"" + num(st.outline_width) +
           "\" stroke-linejoin=\"round\"/>\n";
  }
  svg += "  </g>\n";

  svg += "  <g id=\"retained\">\n";
  for (const auto& p : doc.retained_points) {
    svg += "    <circle data-spot=\"" + detail::xml_escape(p.spot_id) + "\" data-reason=\"" +
           std::string(to_string(p.reason)) + "\" cx=\"" + num(p.position.x) + "\" cy=\"" + num(p.position.y) +
           "\" r=\"" + num(st.point_radius) + "\" fill=\"" + detail::color_of(doc, p.cluster).hex +
           "\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n";
  }
  svg += "  </g>\n";
  svg += "</svg>\n";
  return svg;
}

// -----------------------------------------------------------------------------
// GeoJSON
// -----------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json ring_json(const geometry::Ring& ring) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : ring) arr.push_back({p.x, p.y});
  if (!ring.empty()) arr.push_back({ring.front().x, ring.front().y});  // closed per RFC 7946
  return arr;
}

inline geometry::Ring ring_from_json(const nlohmann::json& arr) {
  geometry::Ring ring;
  for (const auto& v : arr) ring.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

}  // namespace detail

/// Regions and retained points as a FeatureCollection in image pixel space.
/// Exterior rings have positive shoelace area in the written coordinates.
inline std::string export_geojson(const OverlayDocument& doc) {
  using nlohmann::ordered_json;
  ordered_json fc;
  fc["type"] = "FeatureCollection";
  fc["metadata"] = {{"coordinate_system", "image_pixels"},
                    {"y_axis", "down"},
                    {"ring_orientation", "exterior positive signed area in the stored coordinates, holes negative"},
                    {"config_hash", doc.provenance.config_hash},
                    {"seed", doc.provenance.seed}};
  auto features = ordered_json::array();
  for (const auto& r : doc.regions) {
    auto rings = ordered_json::array();
    rings.push_back(detail::ring_json(r.polygon.exterior));
    for (const auto& h : r.polygon.holes) rings.push_back(detail::ring_json(h));
    features.push_back({{"type", "Feature"},
                        {"id", r.id},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}},
                        {"properties",
                         {{"kind", "region"},
                          {"cluster", r.cluster},
                          {"color", detail::color_of(doc, r.cluster).hex},
                          {"member_count", r.member_count},
                          {"source_group", r.source_group}}}});
  }
  for (const auto& p : doc.retained_points) {
    ordered_json props = {{"kind", "retained"},
                          {"spot_id", p.spot_id},
                          {"cluster", p.cluster},
                          {"color", detail::color_of(doc, p.cluster).hex},
                          {"reason", to_string(p.reason)}};
    if (p.region_id) props["region"] = *p.region_id;
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {p.position.x, p.position.y}}}},
                        {"properties", props}});
  }
  fc["features"] = std::move(features);
  return fc.dump(2) + "\n";
}

/// Rebuilds the geometry-bearing part of a document from export_geojson output.
inline OverlayDocument parse_geojson(std::string_view text) {
  nlohmann::json fc;
  try {
    fc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("malformed GeoJSON: ") + e.what());
  }
  if (fc.value("type", "") != "FeatureCollection") throw Error("GeoJSON: expected a FeatureCollection");
  OverlayDocument doc;
  if (fc.contains("metadata")) {
    doc.provenance.config_hash = fc["metadata"].value("config_hash", "");
    doc.provenance.seed = fc["metadata"].value("seed", std::uint64_t{0});
  }
  std::map<int, std::string> colors;
  for (const auto& f : fc.at("features")) {
    const auto& props = f.at("properties");
    const auto& geom = f.at("geometry");
    const int cluster = props.at("cluster").get<int>();
    colors[cluster] = props.at("color").get<std::string>();
    if (props.at("kind") == "region") {
      RegionPolygon r;
      r.id = f.at("id").get<std::string>();
      r.cluster = cluster;
      r.member_count = props.at("member_count").get<std::size_t>();
      r.source_group = props.at("source_group").get<std::size_t>();
      const auto& rings = geom.at("coordinates");
      r.polygon.exterior = detail::ring_from_json(rings.at(0));
      for (std::size_t i = 1; i < rings.size(); ++i) r.polygon.holes.push_back(detail::ring_from_json(rings[i]));
      doc.regions.push_back(std::move(r));
    } else {
      RetainedPoint p;
      p.spot_id = props.at("spot_id").get<std::string>();
      p.cluster = cluster;
      p.reason = parse_reason(props.at("reason").get<std::string>());
      if (props.contains("region")) p.region_id = props["region"].get<std::string>();
      const auto& c = geom.at("coordinates");
      p.position = {c.at(0).get<double>(), c.at(1).get<double>()};
      doc.retained_points.push_back(std::move(p));
    }
  }
  for (const auto& [cluster, hex] : colors) {
    color::ColorAssignment ca;
    ca.cluster = cluster;
    ca.hex = hex;
    const auto q = color::parse_hex(hex);
    ca.srgb = {q.r / 255.0, q.g / 255.0, q.b / 255.0};
    doc.colors.push_back(std::move(ca));
  }
  return doc;
}

// -----------------------------------------------------------------------------
// JSON summary
// -----------------------------------------------------------------------------

inline nlohmann::ordered_json color_json(const color::ColorAssignment& c) {
  return {{"hex", c.hex},
          {"okhsl", {{"h", c.okhsl.h}, {"s", c.okhsl.s}, {"l", c.okhsl.l}}},
          {"srgb", {c.srgb.r, c.srgb.g, c.srgb.b}}};
}

inline nlohmann::ordered_json dotplot_json(const DotPlotSpec& d) {
  auto series = nlohmann::ordered_json::array();
  for (const auto& e : d.series) {
    series.push_back({{"cell_type", e.cell_type}, {"proportion", e.proportion}, {"marker", to_string(e.marker)}});
  }
  auto points = nlohmann::ordered_json::array();
  for (const auto& p : d.connector) points.push_back({p[0], p[1]});
  return {{"cluster", d.cluster},
          {"member_count", d.member_count},
          {"axis", {0.0, 1.0}},
          {"series", series},
          {"connector", {{"style", "dashed"}, {"points", points}}}};
}

inline nlohmann::ordered_json cluster_json(const OverlayDocument& doc, std::size_t c,
                                           const std::vector<clustering::Embedding2>& embedding) {
  nlohmann::ordered_json j;
  j["index"] = static_cast<int>(c);
  j["color"] = color_json(doc.colors.at(c));
  if (c < embedding.size()) j["embedding"] = {embedding[c][0], embedding[c][1]};
  j["dotplot"] = dotplot_json(doc.dotplots.at(c));
  return j;
}

inline nlohmann::ordered_json spot_json(const SpotRecord& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["x"] = s.position.x;
  j["y"] = s.position.y;
  j["cluster"] = s.cluster;
  j["status"] = s.covered ? "covered" : "retained";
  if (s.reason) j["reason"] = to_string(*s.reason);
  if (s.region_id) j["region"] = *s.region_id;
  j["p"] = s.proportions;
  return j;
}

/// `{clusters, regions, retained, spots, ..., config}`; the config object is
/// supplied by the caller so this module stays independent of the CLI layer.
inline std::string summary_json(const OverlayDocument& doc, const std::vector<clustering::Embedding2>& embedding,
                                const nlohmann::ordered_json& config) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = "spothull.summary/1";
  j["cell_types"] = doc.cell_types;

  auto clusters = ordered_json::array();
  for (std::size_t c = 0; c < doc.colors.size(); ++c) clusters.push_back(cluster_json(doc, c, embedding));
  j["clusters"] = std::move(clusters);

  auto regions = ordered_json::array();
  for (const auto& r : doc.regions) {
    regions.push_back({{"id", r.id},
                       {"cluster", r.cluster},
                       {"source_group", r.source_group},
                       {"member_count", r.member_count},
                       {"area", geometry::area(r.polygon)},
                       {"holes", r.polygon.holes.size()}});
  }
  j["regions"] = std::move(regions);

  auto retained = ordered_json::array();
  for (const auto& p : doc.retained_points) {
    ordered_json e = {{"id", p.spot_id}, {"x", p.position.x}, {"y", p.position.y}, {"cluster", p.cluster},
                      {"reason", to_string(p.reason)}};
    if (p.region_id) e["region"] = *p.region_id;
    retained.push_back(std::move(e));
  }
  j["retained"] = std::move(retained);

  auto spots = ordered_json::array();
  for (const auto& s : doc.spots) spots.push_back(spot_json(s));
  j["spots"] = std::move(spots);

  if (doc.image_ref || doc.image_size) {
    ordered_json img = ordered_json::object();
    if (doc.image_ref) img["path"] = *doc.image_ref;
    if (doc.image_size) {
      img["width"] = doc.image_size->width;
      img["height"] = doc.image_size->height;
    }
    j["image"] = img;
  } else {
    j["image"] = nullptr;
  }
  j["canvas"] = {doc.canvas.min_x, doc.canvas.min_y, doc.canvas.width(), doc.canvas.height()};
  j["style"] = {{"stripe_angle", doc.style.stripe_angle}, {"stripe_width", doc.style.stripe_width},
                {"stripe_gap", doc.style.stripe_gap},     {"outline_color", doc.style.outline_color},
                {"outline_width", doc.style.outline_width}, {"point_radius", doc.style.point_radius},
                {"image_opacity", doc.style.image_opacity}};
  j["provenance"] = {{"config_hash", doc.provenance.config_hash}, {"seed", doc.provenance.seed}};
  j["config"] = config;
  return j.dump(2) + "\n";
}

}  // namespace spothull::overlay
