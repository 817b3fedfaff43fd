#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include <gtest/gtest.h>

#include "spothull/app/config.hpp"
#include "spothull/app/image_probe.hpp"
#include "spothull/app/pipeline.hpp"
#include "spothull/app/service.hpp"
#include "synthetic.hpp"

namespace spothull::app {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spothull_test_app_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.k = 4;
  c.seed = 3;
  c.restarts = 3;
  return c;
}

TEST(Config, DefaultsAndHashStability) {
  const PipelineConfig a;
  PipelineConfig b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.output_dir = "/somewhere/else";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, JsonOverridesAndInfinity) {
  const auto j = nlohmann::json::parse(R"({"schema":"spothull.config/1","k":5,"concavity":"inf","outline_color":"#000000"})");
  const auto c = apply_config_json({}, j);
  EXPECT_EQ(c.k, 5);
  EXPECT_TRUE(std::isinf(c.concavity));
  EXPECT_EQ(c.style.outline_color, "#000000");
  EXPECT_EQ(canonical_json(c)["concavity"], "inf");
  EXPECT_EQ(apply_config_json({}, canonical_json(c)).k, 5);
}

TEST(Config, Rejections) {
  EXPECT_THROW(apply_config_json({}, nlohmann::json::parse(R"({"k":5})")), Error);
  EXPECT_THROW(apply_config_json({}, nlohmann::json::parse(R"({"schema":"spothull.config/1","kk":5})")), Error);
  EXPECT_THROW(apply_config_json({}, nlohmann::json::parse(R"({"schema":"spothull.config/1","k":"five"})")), Error);
  PipelineConfig c;
  c.k = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.concavity = 0.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ImageProbe, PngAndJpegHeaders) {
  std::vector<unsigned char> png{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', 0, 0, 0, 13, 'I', 'H', 'D', 'R',
                                 0, 0, 0x02, 0x80, 0, 0, 0x01, 0xe0};
  EXPECT_EQ(probe_image_size(png), (ImageSize{640, 480}));
  std::vector<unsigned char> jpg{0xff, 0xd8, 0xff, 0xe0, 0, 4, 0, 0, 0xff, 0xc0, 0, 11, 8, 0x00, 0x64, 0x00, 0xc8};
  EXPECT_EQ(probe_image_size(jpg), (ImageSize{200, 100}));
  EXPECT_FALSE(probe_image_size({1, 2, 3}).has_value());
}

TEST(Pipeline, InMemoryDeterministic) {
  const auto ds = testing::random_dataset(5, 300, 4);
  const auto a = run_pipeline(ds, small_config());
  const auto b = run_pipeline(ds, small_config());
  EXPECT_EQ(a.svg, b.svg);
  EXPECT_EQ(a.geojson, b.geojson);
  EXPECT_EQ(a.summary, b.summary);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.classification.covered.size() + a.classification.retained.size(), ds.size());
}

TEST(Pipeline, SingleClusterCoversBlob) {
  auto ds = testing::random_dataset(8, 200, 3);
  PipelineConfig c = small_config();
  c.k = 1;
  const auto res = run_pipeline(ds, c);
  EXPECT_EQ(res.model.k, 1);
  EXPECT_GE(res.document.regions.size(), 1u);
  EXPECT_TRUE(res.overlaps.empty());
  EXPECT_EQ(res.document.colors.size(), 1u);
}

TEST(Pipeline, StageErrorsNameTheStage) {
  auto ds = testing::random_dataset(1, 20, 2);
  PipelineConfig c = small_config();
  c.k = 50;
  try {
    run_pipeline(ds, c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "kmeans");
  }
  SpotDataset empty;
  empty.cell_types = {"a"};
  empty.spots = {{"s", {0, 0}, {0.0}}};
  try {
    run_pipeline(empty, small_config());
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "validate");
  }
}

TEST(Pipeline, FileRunWritesArtifactsIdenticalAcrossDirectories) {
  const auto dir = scratch("files");
  const auto ds = testing::random_dataset(2, 250, 4);
  {
    std::ofstream out(dir / "spots.csv");
    out << to_csv(ds);
  }
  PipelineConfig c = small_config();
  c.input_path = (dir / "spots.csv").string();
  c.output_dir = (dir / "out1").string();
  run_pipeline(c);
  c.output_dir = (dir / "out2").string();
  run_pipeline(c);
  for (const char* f : {kOverlaySvg, kOverlayGeojson, kSummaryJson, kReportJson}) {
    EXPECT_TRUE(fs::exists(dir / "out1" / f)) << f;
    EXPECT_EQ(read(dir / "out1" / f), read(dir / "out2" / f)) << f;
  }
}

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("service"));
    auto ds = testing::random_dataset(4, 200, 3);
    ds.spots[0].id = "spot a/b";
    {
      std::ofstream out(*dir_ / "spots.csv");
      out << to_csv(ds);
    }
    PipelineConfig c = small_config();
    c.k = 3;
    c.input_path = (*dir_ / "spots.csv").string();
    c.output_dir = (*dir_ / "out").string();
    run_pipeline(c);
  }
  static void TearDownTestSuite() { delete dir_; }
  static fs::path* dir_;
};
fs::path* ServiceTest::dir_ = nullptr;

TEST_F(ServiceTest, RoutesServeArtifacts) {
  const auto store = ArtifactStore::load(*dir_ / "out");
  const auto svg = store.get("/api/overlay.svg");
  EXPECT_EQ(svg.status, 200);
  EXPECT_EQ(svg.body, read(*dir_ / "out" / kOverlaySvg));
  EXPECT_EQ(store.get("/api/overlay.geojson").content_type, "application/geo+json");
  EXPECT_EQ(store.get("/api/summary").body, read(*dir_ / "out" / kSummaryJson));
  EXPECT_EQ(nlohmann::json::parse(store.get("/api/clusters").body).size(), 3u);
  EXPECT_EQ(store.get("/").status, 200);
  EXPECT_EQ(store.get("/api/image").status, 404);
  EXPECT_EQ(store.get("/nope").status, 404);
}

TEST_F(ServiceTest, SpotLookup) {
  const auto store = ArtifactStore::load(*dir_ / "out");
  const auto hit = store.get("/api/spots/spot1");
  ASSERT_EQ(hit.status, 200);
  const auto j = nlohmann::json::parse(hit.body);
  EXPECT_EQ(j["id"], "spot1");
  EXPECT_EQ(j["proportions"].size(), 6u);
  EXPECT_EQ(store.get("/api/spots/spot%20a%2Fb").status, 200);
  const auto miss = store.get("/api/spots/missing");
  EXPECT_EQ(miss.status, 404);
  EXPECT_TRUE(nlohmann::json::parse(miss.body).contains("error"));
}

TEST_F(ServiceTest, MissingArtifactsRejected) {
  EXPECT_THROW(ArtifactStore::load(*dir_ / "nowhere"), Error);
}

TEST_F(ServiceTest, LiveServer) {
  const auto store = ArtifactStore::load(*dir_ / "out");
  httplib::Server server;
  register_routes(server, store);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  const auto svg = client.Get("/api/overlay.svg");
  ASSERT_TRUE(svg);
  EXPECT_EQ(svg->status, 200);
  EXPECT_EQ(svg->body, read(*dir_ / "out" / kOverlaySvg));
  const auto spot = client.Get("/api/spots/spot2");
  ASSERT_TRUE(spot);
  EXPECT_EQ(spot->status, 200);
  const auto missing = client.Get("/api/spots/zzz");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
  t.join();
}

TEST(BindAddress, Parsing) {
  EXPECT_EQ(parse_bind_address("127.0.0.1:8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_bind_address("9000"), (std::pair<std::string, int>{"127.0.0.1", 9000}));
  EXPECT_THROW(parse_bind_address("host:abc"), Error);
  EXPECT_THROW(parse_bind_address("host:70000"), Error);
}

}  // namespace
}  // namespace spothull::app
