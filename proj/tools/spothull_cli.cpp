// spothull command line: run the pipeline, validate a dataset, or serve an
// artifact directory over HTTP.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "spothull/app/config.hpp"
#include "spothull/app/pipeline.hpp"
#include "spothull/app/service.hpp"
#include "spothull/core_model.hpp"

namespace {

void init_logging() {
  auto logger = spdlog::stderr_color_mt("spothull");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("SPOTHULL_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honour it when asked for explicitly.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

struct RunFlags {
  std::string config_path;
  std::optional<std::string> input;
  std::optional<std::string> format;
  std::optional<std::string> image;
  std::optional<int> image_width;
  std::optional<int> image_height;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  std::optional<double> concavity;
  std::optional<double> radius_factor;
  std::optional<double> length_threshold;
  std::optional<std::size_t> min_region_size;
  std::optional<std::string> out;
};

spothull::app::PipelineConfig resolve_config(const RunFlags& f) {
  spothull::app::PipelineConfig cfg;
  if (!f.config_path.empty()) cfg = spothull::app::load_config_file(f.config_path, cfg);
  if (f.input) cfg.input_path = *f.input;
  if (f.format) cfg.format = spothull::parse_format(*f.format);
  if (f.image) cfg.image_path = *f.image;
  if (f.image_width || f.image_height) {
    if (!f.image_width || !f.image_height) throw spothull::Error("--image-width and --image-height go together");
    cfg.image_size = spothull::ImageSize{*f.image_width, *f.image_height};
  }
  if (f.k) cfg.k = *f.k;
  if (f.seed) cfg.seed = *f.seed;
  if (f.restarts) cfg.restarts = *f.restarts;
  if (f.concavity) cfg.concavity = *f.concavity;
  if (f.radius_factor) cfg.radius_factor = *f.radius_factor;
  if (f.length_threshold) cfg.length_threshold = *f.length_threshold;
  if (f.min_region_size) cfg.min_region_size = *f.min_region_size;
  if (f.out) cfg.output_dir = *f.out;
  if (cfg.input_path.empty()) throw spothull::Error("an input path is required (--input or config 'input')");
  return cfg;
}

int cmd_run(const RunFlags& flags) {
  const auto cfg = resolve_config(flags);
  spdlog::info("config {}: k={} seed={} concavity={} radius_factor={}", spothull::app::config_hash(cfg), cfg.k,
               cfg.seed, cfg.concavity, cfg.radius_factor);
  const auto res = spothull::app::run_pipeline(cfg);
  for (const auto& w : res.validation.warnings) spdlog::warn("spot {}: {}", w.spot_id, w.message);
  for (const auto& e : res.validation.errors) spdlog::warn("spot {} rejected: {}", e.spot_id, e.message);
  for (const auto& w : res.warnings) spdlog::warn("{}", w);
  spdlog::debug("inertia {}", res.model.inertia);
  spdlog::info("{} spots, {} groups, {} regions after {} overlap resolutions; {} covered, {} retained",
               res.document.spots.size(), res.groups.size(), res.document.regions.size(), res.overlaps.size(),
               res.classification.covered.size(), res.classification.retained.size());
  spdlog::info("wrote {}", cfg.output_dir);
  return 0;
}

int cmd_validate(const std::string& input, const std::optional<std::string>& format, double tolerance) {
  auto fmt = format ? std::optional(spothull::parse_format(*format)) : spothull::format_from_extension(input);
  if (!fmt) throw spothull::Error("cannot infer input format from '" + input + "'; pass --format");
  std::ifstream in(input, std::ios::binary);
  if (!in) throw spothull::Error("cannot open input '" + input + "'");
  const auto dataset = spothull::parse_dataset(in, *fmt);
  const auto [validated, report] = spothull::validate_dataset(dataset, tolerance);
  auto j = spothull::report_to_json(report);
  j["spots"] = dataset.size();
  j["accepted_spots"] = validated.size();
  j["cell_types"] = dataset.cell_types;
  std::cout << j.dump(2) << "\n";
  return report.accepted() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"spothull: spatially aggregated cluster overlays for spot proportion data"};
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline and write the overlay artifact");
  run_cmd->add_option("--config", run.config_path, "Config file (JSON, schema spothull.config/1)");
  run_cmd->add_option("--input", run.input, "Spot dataset (CSV or JSON)");
  run_cmd->add_option("--format", run.format, "Input format")->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_option("--image", run.image, "Slide image path");
  run_cmd->add_option("--image-width", run.image_width, "Slide image width in pixels");
  run_cmd->add_option("--image-height", run.image_height, "Slide image height in pixels");
  run_cmd->add_option("--k", run.k, "Number of clusters");
  run_cmd->add_option("--seed", run.seed, "Random seed");
  run_cmd->add_option("--restarts", run.restarts, "k-means restarts");
  run_cmd->add_option("--concavity", run.concavity, "Concave hull concavity (inf = convex hull)");
  run_cmd->add_option("--radius-factor", run.radius_factor, "Neighbor radius as a multiple of the median NN distance");
  run_cmd->add_option("--length-threshold", run.length_threshold, "Hull edges at most this long are not dug");
  run_cmd->add_option("--min-region-size", run.min_region_size, "Smallest group turned into a polygon");
  run_cmd->add_option("--out", run.out, "Output directory");

  std::string artifacts;
  std::string bind = "127.0.0.1:8080";
  auto* serve_cmd = app.add_subcommand("serve", "Serve an artifact directory over HTTP (read-only)");
  serve_cmd->add_option("--artifacts", artifacts, "Artifact directory written by `run`")->required();
  serve_cmd->add_option("--bind", bind, "Listen address host:port");

  std::string validate_input;
  std::optional<std::string> validate_format;
  double tolerance = spothull::kDefaultSimplexTolerance;
  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a dataset, printing a JSON report");
  validate_cmd->add_option("--input", validate_input, "Spot dataset (CSV or JSON)")->required();
  validate_cmd->add_option("--format", validate_format, "Input format")->check(CLI::IsMember({"csv", "json"}));
  validate_cmd->add_option("--tolerance", tolerance, "Simplex tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*validate_cmd) return cmd_validate(validate_input, validate_format, tolerance);
    if (*serve_cmd) {
      spdlog::info("serving {} on {}", artifacts, bind);
      spothull::app::serve(artifacts, bind);
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
