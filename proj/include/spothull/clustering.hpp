#pragma once

// k-means quantization of proportion vectors and a 2-d embedding of the
// resulting centroids.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spothull/core_model.hpp"

namespace spothull::clustering {

using Vector = std::vector<double>;
using Embedding2 = std::array<double, 2>;

struct KMeansOptions {
  int k = 8;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-6;
};

struct ClusterModel {
  int k = 0;
  std::vector<int> labels;
  std::vector<Vector> centroids;
  double inertia = 0.0;
  std::uint64_t seed = 0;  // seed of the winning restart
  std::vector<Embedding2> embedding;

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }
};

/// Result of a single Lloyd run, with the inertia after every iteration.
struct LloydRun {
  ClusterModel model;
  std::vector<double> inertia_trace;
};

inline double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
inline int assign_label(std::span<const double> v, const std::vector<Vector>& centroids) {
  if (centroids.empty()) throw Error("assign_label: no centroids");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (centroids[c].size() != v.size()) {
      throw Error("assign_label: dimension mismatch (" + std::to_string(v.size()) + " vs " +
                  std::to_string(centroids[c].size()) + ")");
    }
    const double d = squared_euclidean(v, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

inline double compute_inertia(const std::vector<Vector>& vectors, const std::vector<int>& labels,
                              const std::vector<Vector>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    total += squared_euclidean(vectors[i], centroids[static_cast<std::size_t>(labels[i])]);
  }
  return total;
}

inline std::size_t distinct_count(const std::vector<Vector>& vectors) {
  std::vector<Vector> sorted = vectors;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::vector<Vector> kmeanspp_init(const std::vector<Vector>& vectors, int k, std::mt19937_64& rng) {
  const std::size_t n = vectors.size();
  std::vector<Vector> centers;
  centers.reserve(static_cast<std::size_t>(k));
  std::size_t first = std::min(n - 1, static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n)));
  centers.push_back(vectors[first]);

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_euclidean(vectors[i], centers[0]);
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double d : d2) total += d;
    const double target = unit_uniform(rng) * total;
    std::size_t pick = n;
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      cum += d2[i];
      pick = i;
      if (cum > target) break;
    }
    centers.push_back(vectors[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_euclidean(vectors[i], centers.back()));
  }
  return centers;
}

inline std::vector<Vector> means(const std::vector<Vector>& vectors, const std::vector<int>& labels, int k,
                                 std::size_t dim) {
  std::vector<Vector> sums(static_cast<std::size_t>(k), Vector(dim, 0.0));
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    for (std::size_t t = 0; t < dim; ++t) sums[c][t] += vectors[i][t];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

/// Gives every empty cluster the point farthest from its own centroid, taken
/// from clusters that can spare a member.
inline void repair_empty_clusters(const std::vector<Vector>& vectors, std::vector<int>& labels,
                                  std::vector<Vector>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  std::vector<double> dist(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    dist[i] = squared_euclidean(vectors[i], centroids[static_cast<std::size_t>(labels[i])]);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    std::size_t far = vectors.size();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
      if (far == vectors.size() || dist[i] > dist[far]) far = i;
    }
    if (far == vectors.size()) throw Error("kmeans: cannot repair empty cluster");
    --counts[static_cast<std::size_t>(labels[far])];
    labels[far] = static_cast<int>(c);
    ++counts[c];
    centroids[c] = vectors[far];
    dist[far] = 0.0;
  }
}

inline void check_kmeans_input(const std::vector<Vector>& vectors, int k) {
  if (k <= 0) throw Error("kmeans: k must be positive");
  if (vectors.empty()) throw Error("kmeans: no input vectors");
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw Error("kmeans: vectors have inconsistent dimension");
  }
  const std::size_t distinct = distinct_count(vectors);
  if (static_cast<std::size_t>(k) > distinct) {
    throw Error("kmeans: k=" + std::to_string(k) + " exceeds the number of distinct vectors (" +
                std::to_string(distinct) + ")");
  }
}

}  // namespace detail

/// One seeded Lloyd run from a k-means++ start.
inline LloydRun lloyd_run(const std::vector<Vector>& vectors, int k, std::uint64_t seed, int max_iter, double tol) {
  detail::check_kmeans_input(vectors, k);
  const std::size_t dim = vectors.front().size();
  std::mt19937_64 rng(seed);

  LloydRun run;
  std::vector<Vector> centroids = detail::kmeanspp_init(vectors, k, rng);
  std::vector<int> labels(vectors.size(), 0);
  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < std::max(1, max_iter); ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const int l = assign_label(vectors[i], centroids);
      changed = changed || l != labels[i];
      labels[i] = l;
    }
    detail::repair_empty_clusters(vectors, labels, centroids);
    centroids = detail::means(vectors, labels, k, dim);
    const double inertia = compute_inertia(vectors, labels, centroids);
    run.inertia_trace.push_back(inertia);
    if (!changed) break;
    if (std::isfinite(previous) && (previous <= 0.0 || (previous - inertia) < tol * previous)) break;
    previous = inertia;
  }

  run.model.k = k;
  run.model.labels = std::move(labels);
  run.model.centroids = std::move(centroids);
  run.model.inertia = run.inertia_trace.back();
  run.model.seed = seed;
  return run;
}

/// Best of `restarts` Lloyd runs seeded seed, seed+1, ...; ties keep the earliest restart.
inline ClusterModel kmeans(const std::vector<Vector>& vectors, const KMeansOptions& opt) {
  detail::check_kmeans_input(vectors, opt.k);
  ClusterModel best;
  bool have = false;
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    LloydRun run = lloyd_run(vectors, opt.k, opt.seed + static_cast<std::uint64_t>(r), opt.max_iter, opt.tol);
    if (!have || run.model.inertia < best.inertia) {
      best = std::move(run.model);
      have = true;
    }
  }
  return best;
}

// -----------------------------------------------------------------------------
// Centroid embedding
// -----------------------------------------------------------------------------

/// Principal components of the centroid cloud, projected to two dimensions.
/// Each axis is signed so its largest-magnitude loading is positive; axes with
/// negligible variance project to exactly zero.
struct PcaEmbedding {
  std::vector<Embedding2> operator()(const std::vector<Vector>& centroids) const {
    const std::size_t k = centroids.size();
    std::vector<Embedding2> out(k, Embedding2{0.0, 0.0});
    if (k <= 1) return out;
    const auto dim = static_cast<Eigen::Index>(centroids.front().size());

    Eigen::MatrixXd x(static_cast<Eigen::Index>(k), dim);
    for (std::size_t i = 0; i < k; ++i) {
      for (Eigen::Index t = 0; t < dim; ++t) x(static_cast<Eigen::Index>(i), t) = centroids[i][static_cast<std::size_t>(t)];
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(k);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& vectors = solver.eigenvectors();
    const double top = values(dim - 1);
    if (!(top > 0.0)) return out;

    // k centred points span at most k-1 dimensions.
    const Eigen::Index usable = std::min<Eigen::Index>({2, dim, static_cast<Eigen::Index>(k) - 1});
    for (Eigen::Index c = 0; c < usable; ++c) {
      const Eigen::Index col = dim - 1 - c;
      if (values(col) <= 1e-12 * top) continue;
      Eigen::VectorXd axis = vectors.col(col);
      Eigen::Index arg = 0;
      for (Eigen::Index t = 1; t < dim; ++t) {
        if (std::abs(axis(t)) > std::abs(axis(arg))) arg = t;
      }
      if (axis(arg) < 0) axis = -axis;
      const Eigen::VectorXd proj = x * axis;
      for (std::size_t i = 0; i < k; ++i) out[i][static_cast<std::size_t>(c)] = proj(static_cast<Eigen::Index>(i));
    }
    return out;
  }
};

template <typename Embedder = PcaEmbedding>
std::vector<Embedding2> embed_centroids(const std::vector<Vector>& centroids, const Embedder& embedder = {}) {
  if (centroids.empty()) throw Error("embed_centroids: no centroids");
  return embedder(centroids);
}

}  // namespace spothull::clustering
