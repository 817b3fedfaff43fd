#pragma once

// Pipeline configuration: defaults, range checks, the canonical JSON form and
// the hash that stamps every output.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "spothull/colorspace.hpp"
#include "spothull/core_model.hpp"
#include "spothull/overlay.hpp"

namespace spothull::app {

inline constexpr const char* kConfigSchema = "spothull.config/1";

struct PipelineConfig {
  std::string input_path;
  std::optional<InputFormat> format;  // inferred from the extension when absent
  std::optional<std::string> image_path;
  std::optional<ImageSize> image_size;

  double simplex_tolerance = kDefaultSimplexTolerance;

  int k = 8;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-6;

  double radius_factor = 1.5;
  double concavity = 2.0;
  double length_threshold = 0.0;
  std::size_t min_region_size = 5;

  color::PaletteOptions palette;
  overlay::StyleConfig style;

  // Not part of the canonical form: the same run written to two places must
  // produce identical bytes.
  std::string output_dir;

  void validate() const {
    auto require = [](bool ok, const std::string& what) {
      if (!ok) throw Error("config: " + what);
    };
    require(k >= 1 && k <= 256, "k must be in [1, 256]");
    require(restarts >= 1 && restarts <= 1000, "restarts must be in [1, 1000]");
    require(max_iter >= 1, "max_iter must be >= 1");
    require(tol >= 0 && std::isfinite(tol), "tol must be a finite value >= 0");
    require(simplex_tolerance >= 0 && simplex_tolerance < 1, "simplex_tolerance must be in [0, 1)");
    require(radius_factor > 0 && std::isfinite(radius_factor), "radius_factor must be positive");
    require(concavity >= 1, "concavity must be >= 1 (inf gives the convex hull)");
    require(length_threshold >= 0 && std::isfinite(length_threshold), "length_threshold must be >= 0");
    require(min_region_size >= 3, "min_region_size must be >= 3");
    require(palette.s_fixed >= 0 && palette.s_fixed <= 1, "s_fixed must be in [0, 1]");
    require(palette.s_min >= 0 && palette.s_min <= 1, "s_min must be in [0, 1]");
    require(palette.l_fixed > 0 && palette.l_fixed < 1, "l_fixed must be in (0, 1)");
    if (image_size) require(image_size->width > 0 && image_size->height > 0, "image size must be positive");
    style.validate();
  }
};

namespace detail {

inline nlohmann::ordered_json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double read_number_or_inf(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw Error("config: '" + key + "' must be a number");
  }
  if (!v.is_number()) throw Error("config: '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace detail

/// Canonical, order-stable form. Output location is deliberately excluded.
inline nlohmann::ordered_json canonical_json(const PipelineConfig& c) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = kConfigSchema;
  j["input"] = c.input_path;
  j["format"] = c.format ? (*c.format == InputFormat::csv ? "csv" : "json") : "auto";
  j["image"] = c.image_path ? ordered_json(*c.image_path) : ordered_json(nullptr);
  j["image_size"] = c.image_size ? ordered_json{c.image_size->width, c.image_size->height} : ordered_json(nullptr);
  j["simplex_tolerance"] = c.simplex_tolerance;
  j["k"] = c.k;
  j["seed"] = c.seed;
  j["restarts"] = c.restarts;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  j["radius_factor"] = c.radius_factor;
  j["concavity"] = detail::number_or_inf(c.concavity);
  j["length_threshold"] = c.length_threshold;
  j["min_region_size"] = c.min_region_size;
  j["s_fixed"] = c.palette.s_fixed;
  j["l_fixed"] = c.palette.l_fixed;
  j["s_min"] = c.palette.s_min;
  j["stripe_angle"] = c.style.stripe_angle;
  j["stripe_width"] = c.style.stripe_width;
  j["stripe_gap"] = c.style.stripe_gap;
  j["outline_color"] = c.style.outline_color;
  j["outline_width"] = c.style.outline_width;
  j["point_radius"] = c.style.point_radius;
  j["image_opacity"] = c.style.image_opacity;
  return j;
}

/// Applies the keys present in a config document on top of `base`.
inline PipelineConfig apply_config_json(PipelineConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw Error("config: top-level value must be an object");
  if (!j.contains("schema") || j["schema"] != kConfigSchema) {
    throw Error(std::string("config: missing or unsupported schema (expected \"") + kConfigSchema + "\")");
  }
  static const std::set<std::string> known = {
      "schema", "input", "format", "image", "image_size", "simplex_tolerance", "k", "seed", "restarts", "max_iter",
      "tol", "radius_factor", "concavity", "length_threshold", "min_region_size", "s_fixed", "l_fixed", "s_min",
      "stripe_angle", "stripe_width", "stripe_gap", "outline_color", "outline_width", "point_radius",
      "image_opacity", "output"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error("config: unknown key '" + key + "'");
  }
  auto num = [&](const char* key, double& out) {
    if (j.contains(key)) out = detail::read_number_or_inf(j[key], key);
  };
  try {
    if (j.contains("input")) base.input_path = j["input"].get<std::string>();
    if (j.contains("format")) {
      const auto f = j["format"].get<std::string>();
      base.format = f == "auto" ? std::nullopt : std::optional<InputFormat>(parse_format(f));
    }
    if (j.contains("image")) {
      base.image_path = j["image"].is_null() ? std::nullopt : std::optional<std::string>(j["image"].get<std::string>());
    }
    if (j.contains("image_size")) {
      if (j["image_size"].is_null()) base.image_size.reset();
      else base.image_size = ImageSize{j["image_size"].at(0).get<int>(), j["image_size"].at(1).get<int>()};
    }
    if (j.contains("output")) base.output_dir = j["output"].get<std::string>();
    num("simplex_tolerance", base.simplex_tolerance);
    if (j.contains("k")) base.k = j["k"].get<int>();
    if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("restarts")) base.restarts = j["restarts"].get<int>();
    if (j.contains("max_iter")) base.max_iter = j["max_iter"].get<int>();
    num("tol", base.tol);
    num("radius_factor", base.radius_factor);
    num("concavity", base.concavity);
    num("length_threshold", base.length_threshold);
    if (j.contains("min_region_size")) base.min_region_size = j["min_region_size"].get<std::size_t>();
    num("s_fixed", base.palette.s_fixed);
    num("l_fixed", base.palette.l_fixed);
    num("s_min", base.palette.s_min);
    num("stripe_angle", base.style.stripe_angle);
    num("stripe_width", base.style.stripe_width);
    num("stripe_gap", base.style.stripe_gap);
    if (j.contains("outline_color")) base.style.outline_color = j["outline_color"].get<std::string>();
    num("outline_width", base.style.outline_width);
    num("point_radius", base.style.point_radius);
    num("image_opacity", base.style.image_opacity);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return base;
}

inline PipelineConfig load_config_file(const std::string& path, PipelineConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config: malformed JSON in '" + path + "': " + e.what());
  }
  return apply_config_json(std::move(base), j);
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_hash(const PipelineConfig& c) { return fnv1a_hex(canonical_json(c).dump()); }

}  // namespace spothull::app
