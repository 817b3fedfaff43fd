#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spothull/polygon_ops.hpp"
#include "synthetic.hpp"

namespace spothull::polygon_ops {
namespace {

using testing::rect;

RegionPolygon region(std::string id, int cluster, Polygon p) {
  RegionPolygon r;
  r.id = std::move(id);
  r.cluster = cluster;
  r.polygon = std::move(p);
  return r;
}

TEST(Booleans, OverlappingSquares) {
  const auto a = rect(0, 0, 1, 1), b = rect(0.5, 0.5, 1.5, 1.5);
  EXPECT_NEAR(total_area(intersect(a, b)), 0.25, 1e-9);
  EXPECT_NEAR(total_area(subtract(a, b)), 0.75, 1e-9);
}

TEST(Booleans, DisjointAndContained) {
  const auto a = rect(0, 0, 1, 1);
  EXPECT_TRUE(intersect(a, rect(2, 2, 3, 3)).empty());
  EXPECT_NEAR(total_area(subtract(a, rect(2, 2, 3, 3))), 1.0, 1e-9);
  EXPECT_TRUE(subtract(a, rect(-1, -1, 2, 2)).empty());
}

TEST(Booleans, InteriorCutLeavesHole) {
  const auto out = subtract(rect(0, 0, 1, 1), rect(0.25, 0.25, 0.5, 0.5));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].holes.size(), 1u);
  EXPECT_NEAR(total_area(out), 0.9375, 1e-9);
  EXPECT_GT(geometry::signed_area(out[0].exterior), 0);
  EXPECT_LT(geometry::signed_area(out[0].holes[0]), 0);
}

TEST(Booleans, BarSplitsInTwo) {
  const auto a = rect(0, 0, 3, 1), b = rect(1, -1, 2, 2);
  const auto out = subtract(a, b);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR(total_area(out), 2.0, 1e-9);
  const double mc = testing::monte_carlo_area(
      [&](const Point& p) { return testing::winding_inside(p, a) && !testing::winding_inside(p, b); },
      {0, 0, 3, 1}, 200000, 5);
  EXPECT_NEAR(mc, total_area(out), 0.02);
}

// Property: area(A & B) + area(A - B) == area(A).
TEST(Booleans, Additivity) {
  testing::Rng rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = testing::random_star(rng, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, 0.5, 2.0, rng.integer(3, 16));
    const auto b = testing::random_star(rng, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, 0.5, 2.0, rng.integer(3, 16));
    if (a.exterior.size() < 3 || b.exterior.size() < 3) continue;
    const double lhs = total_area(intersect(a, b)) + total_area(subtract(a, b));
    EXPECT_NEAR(lhs, geometry::area(a), 1e-9 * std::max(1.0, geometry::area(a)));
  }
}

TEST(Resolve, MajorityOwnerKeepsOverlap) {
  // A (cluster 0) and B (cluster 1) share [1,2]x[0,1]; it holds 3 cluster-0 spots and 1 cluster-1 spot.
  std::vector<RegionPolygon> regions{region("a", 0, rect(0, 0, 2, 1)), region("b", 1, rect(1, 0, 3, 1))};
  const std::vector<Point> pos{{1.2, 0.2}, {1.5, 0.5}, {1.8, 0.8}, {1.4, 0.7}, {0.5, 0.5}, {2.5, 0.5}};
  const std::vector<int> labels{0, 0, 0, 1, 0, 1};
  const auto res = resolve_overlaps(regions, pos, labels);
  ASSERT_EQ(res.overlaps.size(), 1u);
  EXPECT_EQ(res.overlaps[0].count_a, 3u);
  EXPECT_EQ(res.overlaps[0].count_b, 1u);
  EXPECT_EQ(res.overlaps[0].loser, "b");
  ASSERT_EQ(res.regions.size(), 2u);
  EXPECT_NEAR(geometry::area(res.regions[0].polygon), 2.0, 1e-9);
  EXPECT_NEAR(geometry::area(res.regions[1].polygon), 1.0, 1e-9);
  EXPECT_EQ(res.regions[0].member_count, 4u);
  EXPECT_EQ(res.regions[1].member_count, 1u);
}

TEST(Resolve, TieGoesAgainstSmallerArea) {
  std::vector<RegionPolygon> regions{region("a", 0, rect(0, 0, 2, 1)), region("b", 1, rect(1, 0, 4, 1))};
  const std::vector<Point> pos{{1.2, 0.2}, {1.5, 0.5}, {1.4, 0.7}, {1.8, 0.8}};
  const std::vector<int> labels{0, 0, 1, 1};
  const auto res = resolve_overlaps(regions, pos, labels);
  ASSERT_EQ(res.overlaps.size(), 1u);
  EXPECT_EQ(res.overlaps[0].loser, "a");
  EXPECT_NEAR(geometry::area(res.regions[0].polygon), 1.0, 1e-9);
  EXPECT_NEAR(geometry::area(res.regions[1].polygon), 3.0, 1e-9);
}

TEST(Resolve, FullTieGoesAgainstLaterRegion) {
  std::vector<RegionPolygon> regions{region("a", 0, rect(0, 0, 2, 1)), region("b", 1, rect(1, 0, 3, 1))};
  const std::vector<Point> pos{{1.5, 0.5}};
  const std::vector<int> labels{2};
  const auto res = resolve_overlaps(regions, pos, labels);
  ASSERT_EQ(res.overlaps.size(), 1u);
  EXPECT_EQ(res.overlaps[0].loser, "b");
}

TEST(Resolve, SplitLoserGetsSuffixedIds) {
  std::vector<RegionPolygon> regions{region("wide", 0, rect(0, 0, 3, 1)), region("tall", 1, rect(1, -1, 2, 2))};
  const std::vector<Point> pos{{1.5, 0.5}, {1.5, -0.5}, {1.5, 1.5}, {0.5, 0.5}};
  const std::vector<int> labels{1, 1, 1, 0};
  const auto res = resolve_overlaps(regions, pos, labels);
  ASSERT_EQ(res.regions.size(), 3u);
  EXPECT_EQ(res.regions[0].id, "wide.0");
  EXPECT_EQ(res.regions[1].id, "wide.1");
  EXPECT_EQ(res.regions[2].id, "tall");
}

TEST(Resolve, ConsumedRegionIsDropped) {
  std::vector<RegionPolygon> regions{region("big", 0, rect(0, 0, 4, 4)), region("small", 1, rect(1, 1, 2, 2))};
  const std::vector<Point> pos{{1.5, 1.5}, {1.2, 1.2}};
  const std::vector<int> labels{0, 0};
  const auto res = resolve_overlaps(regions, pos, labels);
  ASSERT_EQ(res.regions.size(), 1u);
  EXPECT_EQ(res.regions[0].id, "big");
}

// Property: after resolution no two regions share positive area.
TEST(Resolve, PairwiseExclusiveOnRandomFixtures) {
  testing::Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<RegionPolygon> regions;
    const int m = rng.integer(2, 7);
    for (int i = 0; i < m; ++i) {
      regions.push_back(region("r" + std::to_string(i), i % 3,
                               testing::random_star(rng, {rng.uniform(0, 6), rng.uniform(0, 6)}, 1.0, 3.0, 10)));
    }
    std::vector<Point> pos;
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) {
      pos.push_back({rng.uniform(-2, 8), rng.uniform(-2, 8)});
      labels.push_back(rng.integer(0, 2));
    }
    const auto res = resolve_overlaps(regions, pos, labels);
    const double eps = 1e-9 * 100.0;
    for (std::size_t i = 0; i < res.regions.size(); ++i) {
      for (std::size_t j = i + 1; j < res.regions.size(); ++j) {
        EXPECT_LE(total_area(intersect(res.regions[i].polygon, res.regions[j].polygon, 0.0)), eps);
      }
    }
  }
}

}  // namespace
}  // namespace spothull::polygon_ops
