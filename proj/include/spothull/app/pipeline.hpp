#pragma once

// End-to-end orchestration: parse, validate, cluster, color, group, hull,
// resolve overlaps, classify and render.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spothull/app/config.hpp"
#include "spothull/app/image_probe.hpp"
#include "spothull/clustering.hpp"
#include "spothull/colorspace.hpp"
#include "spothull/core_model.hpp"
#include "spothull/geometry.hpp"
#include "spothull/overlay.hpp"
#include "spothull/polygon_ops.hpp"
#include "spothull/regions.hpp"

namespace spothull::app {

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct ImageInput {
  std::string href;
  std::optional<ImageSize> size;
};

struct PipelineResult {
  overlay::OverlayDocument document;
  clustering::ClusterModel model;
  ValidationReport validation;
  std::vector<regions::SpotGroup> groups;
  std::vector<regions::RegionPolygon> hulls;  // before overlap resolution
  std::vector<polygon_ops::OverlapRecord> overlaps;
  std::vector<std::string> warnings;
  overlay::Classification classification;

  std::string svg;
  std::string geojson;
  std::string summary;
  std::string report;
};

inline constexpr const char* kOverlaySvg = "overlay.svg";
inline constexpr const char* kOverlayGeojson = "overlay.geojson";
inline constexpr const char* kSummaryJson = "summary.json";
inline constexpr const char* kReportJson = "report.json";

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline geometry::Rect canvas_for(const SpotDataset& ds, const std::optional<ImageSize>& size, double margin) {
  if (size) return {0.0, 0.0, static_cast<double>(size->width), static_cast<double>(size->height)};
  if (ds.spots.empty()) return {0.0, 0.0, 1.0, 1.0};
  const auto pts = ds.positions();
  const auto box = geometry::bounding_box(pts);
  return {std::min(0.0, std::floor(box.min_x - margin)), std::min(0.0, std::floor(box.min_y - margin)),
          std::ceil(box.max_x + margin), std::ceil(box.max_y + margin)};
}

inline nlohmann::ordered_json overlap_json(const polygon_ops::OverlapRecord& r) {
  return {{"region_a", r.region_a}, {"region_b", r.region_b}, {"intersection_area", r.intersection_area},
          {"count_a", r.count_a},   {"count_b", r.count_b},   {"loser", r.loser}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace detail

/// Runs every stage on an in-memory dataset. No files are touched.
inline PipelineResult run_pipeline(const SpotDataset& raw, const PipelineConfig& cfg,
                                   const std::optional<ImageInput>& image = std::nullopt) {
  detail::stage("config", [&] { cfg.validate(); return 0; });

  PipelineResult res;
  auto [dataset, report] = detail::stage("validate", [&] { return validate_dataset(raw, cfg.simplex_tolerance); });
  res.validation = std::move(report);
  if (dataset.spots.empty()) throw StageError("validate", "no valid spots remain");

  const std::vector<Point> positions = dataset.positions();
  std::vector<std::string> ids;
  ids.reserve(dataset.size());
  for (const auto& s : dataset.spots) ids.push_back(s.id);

  res.model = detail::stage("kmeans", [&] {
    clustering::KMeansOptions opt;
    opt.k = cfg.k;
    opt.seed = cfg.seed;
    opt.restarts = cfg.restarts;
    opt.max_iter = cfg.max_iter;
    opt.tol = cfg.tol;
    return clustering::kmeans(dataset.proportion_vectors(), opt);
  });
  res.model.embedding = detail::stage("embed", [&] { return clustering::embed_centroids(res.model.centroids); });
  auto colors = detail::stage("colors", [&] { return color::colors_from_embedding(res.model.embedding, cfg.palette); });

  const auto graph = detail::stage("neighbors", [&] { return regions::build_neighbor_graph(positions, cfg.radius_factor); });
  res.groups = detail::stage("components", [&] {
    return regions::same_label_components(graph, res.model.labels, positions);
  });

  regions::HullOptions hull_opt;
  hull_opt.concavity = cfg.concavity;
  hull_opt.length_threshold = cfg.length_threshold;
  hull_opt.min_region_size = cfg.min_region_size;
  auto built = detail::stage("hulls", [&] { return regions::build_regions(res.groups, hull_opt); });
  res.hulls = built.regions;
  res.warnings = std::move(built.warnings);

  const geometry::Rect bbox = geometry::bounding_box(positions);
  // Degenerate extents (a line of spots) still need a positive area scale.
  const double area_scale = std::max(bbox.area(), bbox.diagonal() * bbox.diagonal() * 1e-6);
  polygon_ops::ResolveOptions resolve_opt;
  resolve_opt.eps_area = 1e-9 * area_scale;
  resolve_opt.eps_geom = geometry::geometric_epsilon(bbox);
  auto resolved = detail::stage("overlaps", [&] {
    return polygon_ops::resolve_overlaps(std::move(built.regions), positions, res.model.labels, resolve_opt);
  });
  res.overlaps = std::move(resolved.overlaps);

  res.classification = detail::stage("classify", [&] {
    return overlay::classify_spots(resolved.regions, ids, positions, res.model.labels, resolve_opt.eps_geom,
                                   resolve_opt.eps_area);
  });

  auto& doc = res.document;
  doc.regions = std::move(resolved.regions);
  doc.colors = std::move(colors);
  doc.retained_points = res.classification.retained;
  doc.cell_types = dataset.cell_types;
  doc.dotplots = overlay::build_dotplots(res.model, dataset.cell_types);
  doc.style = cfg.style;
  if (image) {
    doc.image_ref = image->href;
    doc.image_size = image->size;
  }
  doc.canvas = detail::canvas_for(dataset, doc.image_size, 2.0 * cfg.style.point_radius);
  doc.provenance = {config_hash(cfg), cfg.seed};

  doc.spots.reserve(dataset.size());
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    overlay::SpotRecord rec;
    rec.id = dataset.spots[s].id;
    rec.position = dataset.spots[s].position;
    rec.cluster = res.model.labels[s];
    rec.proportions = dataset.spots[s].proportions;
    doc.spots.push_back(std::move(rec));
  }
  for (const auto& c : res.classification.covered) {
    doc.spots[c.spot_index].covered = true;
    doc.spots[c.spot_index].region_id = c.region_id;
  }
  for (std::size_t r = 0; r < res.classification.retained.size(); ++r) {
    auto& rec = doc.spots[res.classification.retained_index[r]];
    rec.reason = res.classification.retained[r].reason;
    rec.region_id = res.classification.retained[r].region_id;
  }

  res.svg = detail::stage("render", [&] { return overlay::render_svg(doc); });
  res.geojson = detail::stage("render", [&] { return overlay::export_geojson(doc); });
  res.summary = detail::stage("render", [&] {
    auto config = canonical_json(cfg);
    return overlay::summary_json(doc, res.model.embedding, config);
  });

  nlohmann::ordered_json rep;
  rep["validation"] = report_to_json(res.validation);
  rep["clustering"] = {{"k", res.model.k}, {"inertia", res.model.inertia}, {"seed", res.model.seed}};
  rep["neighbor_radius"] = graph.radius;
  rep["groups"] = res.groups.size();
  rep["hulls"] = res.hulls.size();
  auto overlaps = nlohmann::ordered_json::array();
  for (const auto& o : res.overlaps) overlaps.push_back(detail::overlap_json(o));
  rep["overlaps"] = std::move(overlaps);
  rep["warnings"] = res.warnings;
  rep["covered"] = res.classification.covered.size();
  rep["retained"] = res.classification.retained.size();
  res.report = rep.dump(2) + "\n";
  return res;
}

/// File-based run: reads cfg.input_path, copies the slide image next to the
/// outputs and writes overlay.svg, overlay.geojson, summary.json, report.json
/// into cfg.output_dir.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  detail::stage("config", [&] { cfg.validate(); return 0; });
  if (cfg.output_dir.empty()) throw StageError("config", "output directory is required");

  const SpotDataset raw = detail::stage("parse", [&] {
    std::ifstream in(cfg.input_path, std::ios::binary);
    if (!in) throw Error("cannot open input '" + cfg.input_path + "'");
    auto format = cfg.format ? cfg.format : format_from_extension(cfg.input_path);
    if (!format) throw Error("cannot infer input format from '" + cfg.input_path + "'; pass --format");
    return parse_dataset(in, *format);
  });

  std::optional<ImageInput> image;
  std::optional<fs::path> image_source;
  detail::stage("image", [&] {
    std::optional<std::string> path = cfg.image_path;
    if (!path && raw.image_ref) {
      fs::path p(*raw.image_ref);
      if (p.is_relative() && !fs::exists(p)) p = fs::path(cfg.input_path).parent_path() / p;
      path = p.string();
    }
    if (!path) return 0;
    ImageInput in;
    in.href = *path;
    in.size = cfg.image_size ? cfg.image_size : raw.image_size;
    if (auto bytes = read_file_bytes(*path)) {
      if (!in.size) in.size = probe_image_size(*bytes);
      image_source = fs::path(*path);
      in.href = "slide" + image_source->extension().string();
    }
    if (!in.size) throw Error("image size unknown for '" + *path + "'; pass --image-width/--image-height");
    image = in;
    return 0;
  });

  PipelineResult res = run_pipeline(raw, cfg, image);

  detail::stage("write", [&] {
    const fs::path out(cfg.output_dir);
    fs::create_directories(out);
    detail::write_text(out / kOverlaySvg, res.svg);
    detail::write_text(out / kOverlayGeojson, res.geojson);
    detail::write_text(out / kSummaryJson, res.summary);
    detail::write_text(out / kReportJson, res.report);
    if (image_source) fs::copy_file(*image_source, out / image->href, fs::copy_options::overwrite_existing);
    return 0;
  });
  return res;
}

}  // namespace spothull::app
