#pragma once

// Read-only HTTP service over a finished pipeline artifact directory.

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "spothull/app/pipeline.hpp"
#include "spothull/core_model.hpp"

namespace spothull::app {

struct Response {
  int status = 200;
  std::string content_type;
  std::string body;
};

namespace detail {

inline std::optional<std::string> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string mime_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

inline Response json_response(int status, const nlohmann::ordered_json& j) {
  return {status, "application/json; charset=utf-8", j.dump()};
}

inline Response json_error(int status, const std::string& message) {
  return json_response(status, {{"error", message}, {"status", status}});
}

inline constexpr const char* kFallbackIndex = R"(<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>spothull</title></head>
<body>
<h1>spothull artifact</h1>
<p>The dashboard bundle is not installed. Available endpoints:</p>
<ul>
<li><a href="/api/overlay.svg">/api/overlay.svg</a></li>
<li><a href="/api/overlay.geojson">/api/overlay.geojson</a></li>
<li><a href="/api/summary">/api/summary</a></li>
<li><a href="/api/clusters">/api/clusters</a></li>
<li>/api/spots/{id}</li>
<li><a href="/api/image">/api/image</a></li>
</ul>
</body></html>
)";

}  // namespace detail

/// Immutable snapshot of an artifact directory, loaded once.
class ArtifactStore {
 public:
  static ArtifactStore load(const std::filesystem::path& dir) {
    ArtifactStore store;
    store.dir_ = dir;
    auto need = [&](const char* name) {
      auto text = detail::slurp(dir / name);
      if (!text) throw Error("artifact file missing: " + (dir / name).string());
      return *text;
    };
    store.svg_ = need(kOverlaySvg);
    store.geojson_ = need(kOverlayGeojson);
    store.summary_text_ = need(kSummaryJson);
    need(kReportJson);
    try {
      store.summary_ = nlohmann::ordered_json::parse(store.summary_text_);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(std::string("artifact summary.json is malformed: ") + e.what());
    }
    for (const char* key : {"clusters", "regions", "retained", "spots", "config"}) {
      if (!store.summary_.contains(key)) throw Error(std::string("artifact summary.json lacks '") + key + "'");
    }
    for (std::size_t i = 0; i < store.summary_["spots"].size(); ++i) {
      store.spot_index_.emplace(store.summary_["spots"][i]["id"].get<std::string>(), i);
    }
    const auto& image = store.summary_["image"];
    if (image.is_object() && image.contains("path")) {
      std::filesystem::path p(image["path"].get<std::string>());
      if (p.is_relative()) p = dir / p;
      if (auto bytes = detail::slurp(p)) {
        store.image_ = std::move(bytes);
        store.image_type_ = detail::mime_for(p);
      }
    }
    if (auto index = detail::slurp(dir / "dashboard" / "index.html")) store.index_html_ = std::move(*index);
    return store;
  }

  const std::filesystem::path& directory() const noexcept { return dir_; }
  const nlohmann::ordered_json& summary() const noexcept { return summary_; }

  Response overlay_svg() const { return {200, "image/svg+xml", svg_}; }
  Response overlay_geojson() const { return {200, "application/geo+json", geojson_}; }
  Response summary_response() const { return {200, "application/json; charset=utf-8", summary_text_}; }

  Response clusters() const { return detail::json_response(200, summary_["clusters"]); }

  Response spot(const std::string& id) const {
    auto it = spot_index_.find(id);
    if (it == spot_index_.end()) return detail::json_error(404, "unknown spot id '" + id + "'");
    const auto& s = summary_["spots"][it->second];
    nlohmann::ordered_json body = s;
    nlohmann::ordered_json proportions = nlohmann::ordered_json::object();
    const auto& types = summary_["cell_types"];
    for (std::size_t t = 0; t < types.size() && t < s["p"].size(); ++t) {
      proportions[types[t].get<std::string>()] = s["p"][t];
    }
    body["proportions"] = std::move(proportions);
    return detail::json_response(200, body);
  }

  Response image() const {
    if (!image_) return detail::json_error(404, "artifact has no slide image");
    return {200, image_type_, *image_};
  }

  Response index() const {
    return {200, "text/html; charset=utf-8", index_html_ ? *index_html_ : std::string(detail::kFallbackIndex)};
  }

  /// Routes a GET path; used by the HTTP server and directly by tests.
  Response get(std::string_view path) const {
    if (path == "/" || path == "/index.html") return index();
    if (path == "/api/overlay.svg") return overlay_svg();
    if (path == "/api/overlay.geojson") return overlay_geojson();
    if (path == "/api/summary") return summary_response();
    if (path == "/api/clusters") return clusters();
    if (path == "/api/image") return image();
    constexpr std::string_view spots_prefix = "/api/spots/";
    if (path.substr(0, spots_prefix.size()) == spots_prefix && path.size() > spots_prefix.size()) {
      return spot(httplib::detail::decode_url(std::string(path.substr(spots_prefix.size())), false));
    }
    return detail::json_error(404, "not found");
  }

 private:
  std::filesystem::path dir_;
  std::string svg_;
  std::string geojson_;
  std::string summary_text_;
  nlohmann::ordered_json summary_;
  std::map<std::string, std::size_t> spot_index_;
  std::optional<std::string> image_;
  std::string image_type_;
  std::optional<std::string> index_html_;
};

/// Registers the read-only routes on `server`. The store must outlive it.
inline void register_routes(httplib::Server& server, const ArtifactStore& store) {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/", [&](const httplib::Request&, httplib::Response& res) { reply(res, store.index()); });
  server.Get("/index.html", [&](const httplib::Request&, httplib::Response& res) { reply(res, store.index()); });
  server.Get("/api/overlay.svg", [&](const httplib::Request&, httplib::Response& res) { reply(res, store.overlay_svg()); });
  server.Get("/api/overlay.geojson",
             [&](const httplib::Request&, httplib::Response& res) { reply(res, store.overlay_geojson()); });
  server.Get("/api/summary", [&](const httplib::Request&, httplib::Response& res) { reply(res, store.summary_response()); });
  server.Get("/api/clusters", [&](const httplib::Request&, httplib::Response& res) { reply(res, store.clusters()); });
  server.Get("/api/image", [&](const httplib::Request&, httplib::Response& res) { reply(res, store.image()); });
  server.Get(R"(/api/spots/(.+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, store.spot(req.matches[1].str()));
  });
  const auto dashboard = store.directory() / "dashboard";
  if (std::filesystem::is_directory(dashboard)) server.set_mount_point("/dashboard", dashboard.string());
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const auto r = detail::json_error(res.status, res.status == 404 ? "not found" : "error");
      res.set_content(r.body, r.content_type);
    }
  });
}

/// Splits "host:port"; a bare port binds to 127.0.0.1.
inline std::pair<std::string, int> parse_bind_address(const std::string& bind) {
  const auto colon = bind.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : bind.substr(0, colon);
  const std::string port = colon == std::string::npos ? bind : bind.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  int p = 0;
  try {
    std::size_t used = 0;
    p = std::stoi(port, &used);
    if (used != port.size()) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw Error("invalid bind address '" + bind + "' (expected host:port)");
  }
  if (p < 0 || p > 65535) throw Error("port out of range in '" + bind + "'");
  return {host, p};
}

/// Blocks serving `artifact_dir` until the server is stopped.
inline void serve(const std::filesystem::path& artifact_dir, const std::string& bind) {
  const ArtifactStore store = ArtifactStore::load(artifact_dir);
  const auto [host, port] = parse_bind_address(bind);
  httplib::Server server;
  register_routes(server, store);
  if (!server.listen(host, port)) throw Error("cannot listen on " + bind);
}

}  // namespace spothull::app
