#pragma once

// Shared domain types for spot datasets plus CSV/JSON ingest and validation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

namespace spothull {

// -----------------------------------------------------------------------------
// Errors
// -----------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised while reading a dataset. Row is 1-based over data rows (0 = header).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& message)
      : Error("row " + std::to_string(row) + (column.empty() ? "" : ", column '" + column + "'") +
              ": " + message),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// -----------------------------------------------------------------------------
// Types
// -----------------------------------------------------------------------------

/// Image pixel coordinates, x to the right and y down.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct Spot {
  std::string id;
  Point position;
  std::vector<double> proportions;

  friend bool operator==(const Spot&, const Spot&) = default;
};

struct SpotDataset {
  std::vector<Spot> spots;
  std::vector<std::string> cell_types;
  std::optional<std::string> image_ref;
  std::optional<ImageSize> image_size;

  std::size_t size() const noexcept { return spots.size(); }
  std::size_t type_count() const noexcept { return cell_types.size(); }

  std::vector<Point> positions() const {
    std::vector<Point> out;
    out.reserve(spots.size());
    for (const auto& s : spots) out.push_back(s.position);
    return out;
  }

  std::vector<std::vector<double>> proportion_vectors() const {
    std::vector<std::vector<double>> out;
    out.reserve(spots.size());
    for (const auto& s : spots) out.push_back(s.proportions);
    return out;
  }

  friend bool operator==(const SpotDataset&, const SpotDataset&) = default;
};

struct ValidationIssue {
  std::string spot_id;
  std::string message;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  std::size_t normalized_count = 0;

  bool accepted() const noexcept { return errors.empty(); }
};

enum class InputFormat { csv, json };

inline constexpr double kDefaultSimplexTolerance = 0.01;

inline InputFormat parse_format(std::string_view name) {
  if (name == "csv") return InputFormat::csv;
  if (name == "json") return InputFormat::json;
  throw Error("unknown input format '" + std::string(name) + "' (expected csv or json)");
}

inline std::optional<InputFormat> format_from_extension(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.substr(path.size() - suffix.size()) == suffix;
  };
  if (ends_with(".csv")) return InputFormat::csv;
  if (ends_with(".json")) return InputFormat::json;
  return std::nullopt;
}

// -----------------------------------------------------------------------------
// Number formatting shared by every text emitter
// -----------------------------------------------------------------------------

/// Shortest decimal form that parses back to the same double.
inline std::string format_shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

/// Fixed-precision form with trailing zeros trimmed ("1.500" -> "1.5", "-0.000" -> "0").
inline std::string format_fixed(double v, int precision = 3) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  if (ec != std::errc{}) throw Error("number formatting failed");
  std::string s(buf, ptr);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_record(std::string_view line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!trim(cur).empty()) throw ParseError(row, "", "unexpected quote inside field");
      cur.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(row, "", "unterminated quoted field");
  fields.push_back(was_quoted ? cur : std::string(trim(cur)));
  return fields;
}

inline double parse_number(std::string_view text, std::size_t row, const std::string& column) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(row, column, "non-numeric value '" + std::string(text) + "'");
  }
  return value;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline void check_cell_types(const std::vector<std::string>& types, std::size_t row) {
  std::unordered_set<std::string> seen;
  for (const auto& t : types) {
    if (t.empty()) throw ParseError(row, "", "empty cell-type name");
    if (!seen.insert(t).second) throw ParseError(row, t, "duplicate cell-type name '" + t + "'");
  }
}

}  // namespace detail

// -----------------------------------------------------------------------------
// Parsing
// -----------------------------------------------------------------------------

inline SpotDataset parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  // Skip a UTF-8 BOM and leading blank lines.
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw ParseError(0, "", "missing header");

  auto header = detail::split_csv_record(line, 0);
  if (header.size() < 4 || header[0] != "spot_id" || header[1] != "x" || header[2] != "y") {
    for (const char* required : {"spot_id", "x", "y"}) {
      if (std::find(header.begin(), header.end(), required) == header.end()) {
        throw ParseError(0, required, "missing required column");
      }
    }
    if (header.size() < 4) throw ParseError(0, "", "at least one cell-type column is required");
    throw ParseError(0, "", "malformed header: expected spot_id,x,y,<cell types...>");
  }

  SpotDataset ds;
  ds.cell_types.assign(header.begin() + 3, header.end());
  detail::check_cell_types(ds.cell_types, 0);

  std::unordered_set<std::string> ids;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    auto fields = detail::split_csv_record(line, row);
    if (fields.size() != header.size()) {
      throw ParseError(row, "", "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    Spot s;
    s.id = fields[0];
    if (s.id.empty()) throw ParseError(row, "spot_id", "empty spot id");
    if (!ids.insert(s.id).second) throw ParseError(row, "spot_id", "duplicate spot id '" + s.id + "'");
    s.position.x = detail::parse_number(fields[1], row, "x");
    s.position.y = detail::parse_number(fields[2], row, "y");
    s.proportions.reserve(ds.cell_types.size());
    for (std::size_t c = 3; c < fields.size(); ++c) {
      s.proportions.push_back(detail::parse_number(fields[c], row, header[c]));
    }
    ds.spots.push_back(std::move(s));
  }
  return ds;
}

inline SpotDataset parse_json(std::istream& in) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, "", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(0, "", "top-level value must be an object");

  SpotDataset ds;
  if (!doc.contains("cell_types") || !doc["cell_types"].is_array()) {
    throw ParseError(0, "cell_types", "missing required array");
  }
  for (const auto& t : doc["cell_types"]) {
    if (!t.is_string()) throw ParseError(0, "cell_types", "cell-type names must be strings");
    ds.cell_types.push_back(t.get<std::string>());
  }
  if (ds.cell_types.empty()) throw ParseError(0, "cell_types", "at least one cell type is required");
  detail::check_cell_types(ds.cell_types, 0);

  if (doc.contains("image") && !doc["image"].is_null()) {
    const auto& img = doc["image"];
    if (!img.is_object()) throw ParseError(0, "image", "must be an object");
    if (img.contains("path")) {
      if (!img["path"].is_string()) throw ParseError(0, "image.path", "must be a string");
      ds.image_ref = img["path"].get<std::string>();
    }
    if (img.contains("width") || img.contains("height")) {
      if (!img.contains("width") || !img.contains("height") || !img["width"].is_number_integer() ||
          !img["height"].is_number_integer()) {
        throw ParseError(0, "image", "width and height must both be integers");
      }
      ds.image_size = ImageSize{img["width"].get<int>(), img["height"].get<int>()};
    }
  }

  if (!doc.contains("spots") || !doc["spots"].is_array()) throw ParseError(0, "spots", "missing required array");
  std::unordered_set<std::string> ids;
  std::size_t row = 0;
  for (const auto& js : doc["spots"]) {
    ++row;
    if (!js.is_object()) throw ParseError(row, "", "spot must be an object");
    for (const char* key : {"id", "x", "y", "p"}) {
      if (!js.contains(key)) throw ParseError(row, key, "missing required field");
    }
    Spot s;
    if (!js["id"].is_string()) throw ParseError(row, "id", "must be a string");
    s.id = js["id"].get<std::string>();
    if (s.id.empty()) throw ParseError(row, "id", "empty spot id");
    if (!ids.insert(s.id).second) throw ParseError(row, "id", "duplicate spot id '" + s.id + "'");
    if (!js["x"].is_number()) throw ParseError(row, "x", "non-numeric value");
    if (!js["y"].is_number()) throw ParseError(row, "y", "non-numeric value");
    s.position = {js["x"].get<double>(), js["y"].get<double>()};
    if (!js["p"].is_array()) throw ParseError(row, "p", "must be an array");
    if (js["p"].size() != ds.cell_types.size()) {
      throw ParseError(row, "p", "expected " + std::to_string(ds.cell_types.size()) + " proportions, found " +
                                     std::to_string(js["p"].size()));
    }
    for (std::size_t c = 0; c < js["p"].size(); ++c) {
      if (!js["p"][c].is_number()) throw ParseError(row, ds.cell_types[c], "non-numeric value");
      s.proportions.push_back(js["p"][c].get<double>());
    }
    ds.spots.push_back(std::move(s));
  }
  return ds;
}

inline SpotDataset parse_dataset(std::istream& in, InputFormat format) {
  return format == InputFormat::csv ? parse_csv(in) : parse_json(in);
}

inline SpotDataset parse_dataset(std::string_view text, InputFormat format) {
  std::istringstream in{std::string(text)};
  return parse_dataset(in, format);
}

// -----------------------------------------------------------------------------
// Serialization
// -----------------------------------------------------------------------------

inline std::string to_csv(const SpotDataset& ds) {
  std::string out = "spot_id,x,y";
  for (const auto& t : ds.cell_types) out += "," + detail::csv_quote(t);
  out += "\n";
  for (const auto& s : ds.spots) {
    out += detail::csv_quote(s.id) + "," + format_shortest(s.position.x) + "," + format_shortest(s.position.y);
    for (double p : s.proportions) out += "," + format_shortest(p);
    out += "\n";
  }
  return out;
}

inline std::string to_json(const SpotDataset& ds) {
  nlohmann::ordered_json doc;
  doc["cell_types"] = ds.cell_types;
  if (ds.image_ref || ds.image_size) {
    nlohmann::ordered_json img = nlohmann::ordered_json::object();
    if (ds.image_ref) img["path"] = *ds.image_ref;
    if (ds.image_size) {
      img["width"] = ds.image_size->width;
      img["height"] = ds.image_size->height;
    }
    doc["image"] = img;
  }
  doc["spots"] = nlohmann::ordered_json::array();
  for (const auto& s : ds.spots) {
    doc["spots"].push_back({{"id", s.id}, {"x", s.position.x}, {"y", s.position.y}, {"p", s.proportions}});
  }
  return doc.dump(2) + "\n";
}

// -----------------------------------------------------------------------------
// Normalization and validation
// -----------------------------------------------------------------------------

struct NormalizedProportions {
  std::vector<double> values;
  bool rescaled = false;   // values were divided by their sum
  bool out_of_tolerance = false;  // |sum - 1| exceeded the tolerance
};

/// Sums closer to 1 than this are left untouched so validation is idempotent.
inline constexpr double kExactSimplexSlack = 1e-12;

inline NormalizedProportions normalize_proportions(const std::vector<double>& v, double tolerance) {
  double sum = 0.0;
  for (double p : v) {
    if (!std::isfinite(p)) throw ValidationError("non-finite proportion");
    if (p < 0.0) throw ValidationError("negative proportion " + format_shortest(p));
    sum += p;
  }
  if (sum <= 0.0) throw ValidationError("proportions sum to zero");

  NormalizedProportions out;
  out.out_of_tolerance = std::abs(sum - 1.0) > tolerance;
  if (std::abs(sum - 1.0) <= kExactSimplexSlack) {
    out.values = v;
    return out;
  }
  out.rescaled = true;
  out.values.reserve(v.size());
  for (double p : v) out.values.push_back(p / sum);
  return out;
}

inline std::pair<SpotDataset, ValidationReport> validate_dataset(const SpotDataset& d,
                                                                 double tolerance = kDefaultSimplexTolerance) {
  SpotDataset out;
  out.cell_types = d.cell_types;
  out.image_ref = d.image_ref;
  out.image_size = d.image_size;
  ValidationReport report;

  std::unordered_set<std::string> seen;
  for (const auto& spot : d.spots) {
    auto reject = [&](std::string msg) { report.errors.push_back({spot.id, std::move(msg)}); };
    if (!seen.insert(spot.id).second) {
      reject("duplicate spot id");
      continue;
    }
    if (!std::isfinite(spot.position.x) || !std::isfinite(spot.position.y)) {
      reject("non-finite position");
      continue;
    }
    if (spot.proportions.size() != d.cell_types.size()) {
      reject("expected " + std::to_string(d.cell_types.size()) + " proportions, found " +
             std::to_string(spot.proportions.size()));
      continue;
    }
    NormalizedProportions norm;
    try {
      norm = normalize_proportions(spot.proportions, tolerance);
    } catch (const ValidationError& e) {
      reject(e.what());
      continue;
    }
    if (norm.rescaled) ++report.normalized_count;
    if (norm.out_of_tolerance) report.warnings.push_back({spot.id, "proportions renormalized from sum outside tolerance"});
    Spot s = spot;
    s.proportions = std::move(norm.values);
    out.spots.push_back(std::move(s));
  }
  return {std::move(out), std::move(report)};
}

inline nlohmann::ordered_json report_to_json(const ValidationReport& r) {
  auto issues = [](const std::vector<ValidationIssue>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& i : v) arr.push_back({{"spot_id", i.spot_id}, {"message", i.message}});
    return arr;
  };
  return {{"accepted", r.accepted()},
          {"errors", issues(r.errors)},
          {"warnings", issues(r.warnings)},
          {"normalized_count", r.normalized_count}};
}

}  // namespace spothull
