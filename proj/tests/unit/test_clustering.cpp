#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spothull/clustering.hpp"
#include "synthetic.hpp"

namespace spothull::clustering {
namespace {

using testing::Rng;

KMeansOptions opts(int k, std::uint64_t seed = 0) {
  KMeansOptions o;
  o.k = k;
  o.seed = seed;
  return o;
}

TEST(KMeans, PerfectSeparation) {
  const std::vector<Vector> v{{1, 0}, {0, 1}};
  const auto m = kmeans(v, opts(2));
  EXPECT_NE(m.labels[0], m.labels[1]);
  EXPECT_DOUBLE_EQ(m.inertia, 0.0);
}

TEST(KMeans, SingleClusterClosedForm) {
  Rng rng(2);
  std::vector<Vector> v;
  for (int i = 0; i < 25; ++i) v.push_back(rng.simplex(4));
  const auto m = kmeans(v, opts(1));
  Vector mean(4, 0.0);
  for (const auto& x : v) {
    for (std::size_t t = 0; t < 4; ++t) mean[t] += x[t] / 25.0;
  }
  double total_variance = 0.0;  // sum over dimensions of the population variance
  for (std::size_t t = 0; t < 4; ++t) {
    double s = 0;
    for (const auto& x : v) s += (x[t] - mean[t]) * (x[t] - mean[t]);
    total_variance += s / 25.0;
  }
  for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(m.centroids[0][t], mean[t], 1e-12);
  EXPECT_NEAR(m.inertia, total_variance * 25.0, 1e-12);
}

TEST(KMeans, TwoSeparatedGroupsMatchExhaustiveSearch) {
  // Two 4-point groups; centres 0.5 apart, members within 0.05 of their centre.
  const std::vector<Vector> v{{0.10, 0.90}, {0.14, 0.86}, {0.08, 0.92}, {0.12, 0.88},
                              {0.60, 0.40}, {0.57, 0.43}, {0.63, 0.37}, {0.61, 0.39}};
  const auto oracle = testing::brute_force_two_means(v);
  const auto m = kmeans(v, opts(2, 4));
  EXPECT_EQ(testing::canonical_partition(m.labels), testing::canonical_partition(oracle.labels));
  EXPECT_NEAR(m.inertia, oracle.inertia, 1e-12);
  EXPECT_EQ(testing::canonical_partition(m.labels), (testing::Partition{{0, 1, 2, 3}, {4, 5, 6, 7}}));
}

TEST(KMeans, Errors) {
  const std::vector<Vector> v{{1, 0}, {1, 0}, {0, 1}};
  EXPECT_THROW(kmeans(v, opts(3)), Error);
  EXPECT_THROW(kmeans(v, opts(0)), Error);
  EXPECT_THROW(kmeans(v, opts(-1)), Error);
  EXPECT_NO_THROW(kmeans(v, opts(2)));
}

// Model invariants: every cluster populated, centroids are member means.
TEST(KMeans, ModelInvariants) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> v;
    for (int i = 0; i < 80; ++i) v.push_back(rng.simplex(5));
    const int k = rng.integer(1, 8);
    const auto m = kmeans(v, opts(k, static_cast<std::uint64_t>(trial)));
    const auto sizes = m.cluster_sizes();
    for (auto s : sizes) EXPECT_GE(s, 1u);
    for (int c = 0; c < k; ++c) {
      Vector mean(5, 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (m.labels[i] != c) continue;
        for (std::size_t t = 0; t < 5; ++t) mean[t] += v[i][t] / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
      }
      for (std::size_t t = 0; t < 5; ++t) EXPECT_NEAR(m.centroids[static_cast<std::size_t>(c)][t], mean[t], 1e-9);
    }
    EXPECT_GE(m.inertia, 0.0);
    EXPECT_NEAR(m.inertia, compute_inertia(v, m.labels, m.centroids), 1e-12);
  }
}

TEST(KMeans, InertiaNonIncreasingWithinRun) {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vector> v;
    for (int i = 0; i < 200; ++i) v.push_back(rng.simplex(6));
    const auto run = lloyd_run(v, rng.integer(2, 8), static_cast<std::uint64_t>(trial), 300, 0.0);
    for (std::size_t i = 1; i < run.inertia_trace.size(); ++i) {
      EXPECT_LE(run.inertia_trace[i], run.inertia_trace[i - 1] * (1 + 1e-12));
    }
  }
}

TEST(KMeans, DeterministicForSeed) {
  Rng rng(4);
  std::vector<Vector> v;
  for (int i = 0; i < 300; ++i) v.push_back(rng.simplex(5));
  const auto a = kmeans(v, opts(6, 99));
  const auto b = kmeans(v, opts(6, 99));
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.inertia, b.inertia);
  EXPECT_EQ(embed_centroids(a.centroids), embed_centroids(b.centroids));
}

// Permuting the input leaves the recovered partition unchanged (well-separated data).
TEST(KMeans, PermutationInvariantPartition) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vector> v;
    const std::vector<Vector> centres{{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}};
    for (int i = 0; i < 12; ++i) {
      Vector x = centres[static_cast<std::size_t>(i % 3)];
      x[0] += rng.uniform(-0.02, 0.02);
      x[1] += rng.uniform(-0.02, 0.02);
      v.push_back(x);
    }
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[static_cast<std::size_t>(rng.integer(0, static_cast<int>(i)))]);
    std::vector<Vector> permuted;
    for (std::size_t i : perm) permuted.push_back(v[i]);

    const auto a = kmeans(v, opts(3, 1));
    const auto b = kmeans(permuted, opts(3, 1));
    std::vector<int> back(v.size());
    for (std::size_t i = 0; i < perm.size(); ++i) back[perm[i]] = b.labels[i];
    EXPECT_EQ(testing::canonical_partition(a.labels), testing::canonical_partition(back));
  }
}

TEST(AssignLabel, Rules) {
  const std::vector<Vector> c{{1, 0}, {0, 1}, {0.5, 0.5}};
  EXPECT_EQ(assign_label(std::vector<double>{0.5, 0.5}, c), 2);
  const std::vector<Vector> two{{1, 0}, {0, 1}};
  EXPECT_EQ(assign_label(std::vector<double>{0.5, 0.5}, two), 0);
  EXPECT_EQ(assign_label(std::vector<double>{0.9, 0.1}, two), 0);
  EXPECT_THROW(assign_label(std::vector<double>{1, 0, 0}, two), Error);
  EXPECT_THROW(assign_label(std::vector<double>{1, 0}, {}), Error);
}

TEST(EmbedCentroids, IdenticalCentroidsCollapse) {
  const std::vector<Vector> c(4, Vector{0.2, 0.3, 0.5});
  for (const auto& e : embed_centroids(c)) {
    EXPECT_EQ(e[0], 0.0);
    EXPECT_EQ(e[1], 0.0);
  }
  EXPECT_EQ(embed_centroids(std::vector<Vector>{{1.0, 0.0}}), (std::vector<Embedding2>{{0.0, 0.0}}));
}

TEST(EmbedCentroids, RankOneHasZeroSecondAxis) {
  const std::vector<Vector> c{{0.1, 0.2, 0.7}, {0.3, 0.2, 0.5}, {0.6, 0.2, 0.2}, {0.45, 0.2, 0.35}};
  const auto e = embed_centroids(c);
  for (const auto& p : e) EXPECT_EQ(p[1], 0.0);
  // Distances along the line are preserved.
  EXPECT_NEAR(std::abs(e[0][0] - e[2][0]), std::sqrt(2.0) * 0.5, 1e-12);
}

TEST(EmbedCentroids, SimplexCornersAreEquilateral) {
  const std::vector<Vector> c{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const auto e = embed_centroids(c);
  auto d = [&](std::size_t i, std::size_t j) { return std::hypot(e[i][0] - e[j][0], e[i][1] - e[j][1]); };
  EXPECT_NEAR(d(0, 1), std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(d(1, 2), std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(d(0, 2), std::sqrt(2.0), 1e-9);
}

TEST(EmbedCentroids, TwoCentroidsPadSecondAxis) {
  const auto e = embed_centroids(std::vector<Vector>{{1, 0, 0}, {0, 0.5, 0.5}});
  EXPECT_EQ(e[0][1], 0.0);
  EXPECT_EQ(e[1][1], 0.0);
  EXPECT_NEAR(std::abs(e[0][0] - e[1][0]), std::sqrt(1.5), 1e-12);
}

// Property: centroids spanning at most two dimensions embed isometrically.
TEST(EmbedCentroids, IsometricOnPlanarCentroids) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = static_cast<std::size_t>(rng.integer(3, 8));
    const int k = rng.integer(2, 9);
    Vector origin(dim), u(dim), w(dim);
    for (std::size_t t = 0; t < dim; ++t) {
      origin[t] = rng.uniform(-1, 1);
      u[t] = rng.uniform(-1, 1);
      w[t] = rng.uniform(-1, 1);
    }
    std::vector<Vector> c;
    for (int i = 0; i < k; ++i) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
      Vector x(dim);
      for (std::size_t t = 0; t < dim; ++t) x[t] = origin[t] + a * u[t] + b * w[t];
      c.push_back(x);
    }
    const auto e = embed_centroids(c);
    double worst = 0;
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        const double orig = std::sqrt(squared_euclidean(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(j)]));
        const double emb = std::hypot(e[static_cast<std::size_t>(i)][0] - e[static_cast<std::size_t>(j)][0],
                                      e[static_cast<std::size_t>(i)][1] - e[static_cast<std::size_t>(j)][1]);
        worst = std::max(worst, std::abs(emb - orig) / orig);
      }
    }
    EXPECT_LT(worst, 1e-9);
  }
}

TEST(EmbedCentroids, SignConvention) {
  const std::vector<Vector> c{{0.9, 0.05, 0.05}, {0.05, 0.9, 0.05}, {0.05, 0.05, 0.9}, {0.4, 0.3, 0.3}};
  const auto e1 = embed_centroids(c);
  // Mirroring the input order does not flip axes.
  std::vector<Vector> reversed(c.rbegin(), c.rend());
  const auto e2 = embed_centroids(reversed);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(e1[i][0], e2[c.size() - 1 - i][0], 1e-12);
  }
}

}  // namespace
}  // namespace spothull::clustering
