#pragma once

// Seeded synthetic datasets and polygons shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "spothull/core_model.hpp"
#include "spothull/geometry.hpp"

namespace spothull::testing {

/// Portable uniform draws; std distributions differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
  }
  std::vector<double> simplex(std::size_t dim) {
    std::vector<double> v(dim);
    double sum = 0;
    for (auto& x : v) {
      x = -std::log(1.0 - uniform());  // Exp(1) draws give a flat Dirichlet
      sum += x;
    }
    for (auto& x : v) x /= sum;
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

inline std::vector<Point> hex_grid(int cols, int rows, double spacing) {
  std::vector<Point> pts;
  const double dy = spacing * std::sqrt(3.0) / 2.0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      pts.push_back({c * spacing + (r % 2) * spacing / 2.0, r * dy});
    }
  }
  return pts;
}

inline std::vector<Point> square_grid(int cols, int rows, double spacing) {
  std::vector<Point> pts;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) pts.push_back({c * spacing, r * spacing});
  }
  return pts;
}

struct LabeledDataset {
  SpotDataset dataset;
  std::vector<int> truth;  // generating blob per spot
};

/// 500-spot hex grid split into four quadrant blobs over five cell types.
/// Blob b is dominated by cell type b; type 4 is a shared background.
inline LabeledDataset four_blob_dataset(std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset out;
  out.dataset.cell_types = {"T0", "T1", "T2", "T3", "T4"};
  const auto pts = hex_grid(25, 20, 10.0);
  const double mid_x = 122.5;
  const double mid_y = 9.5 * 10.0 * std::sqrt(3.0) / 2.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int blob = (pts[i].x < mid_x ? 0 : 1) + (pts[i].y < mid_y ? 0 : 2);
    std::vector<double> p(5, 0.05);
    p[static_cast<std::size_t>(blob)] = 0.6;
    p[4] = 0.2;
    double sum = 0;
    for (auto& v : p) {
      v = std::max(0.0, v + rng.uniform(-0.05, 0.05));
      sum += v;
    }
    for (auto& v : p) v /= sum;
    out.dataset.spots.push_back({"s" + std::to_string(i), pts[i], p});
    out.truth.push_back(blob);
  }
  return out;
}

/// Spatially coherent random dataset: a jittered hex lattice whose proportions
/// blend k random source profiles by distance, plus a few scrambled spots.
inline SpotDataset random_dataset(std::uint64_t seed, int n, int k, std::size_t types = 6) {
  Rng rng(seed);
  SpotDataset ds;
  for (std::size_t t = 0; t < types; ++t) ds.cell_types.push_back("type" + std::to_string(t));
  const int cols = std::max(2, static_cast<int>(std::round(std::sqrt(static_cast<double>(n)) * 1.1)));
  const int rows = (n + cols - 1) / cols;
  auto lattice = hex_grid(cols, rows, 10.0);
  lattice.resize(static_cast<std::size_t>(n));
  const auto box = geometry::bounding_box(lattice);

  std::vector<Point> sources;
  std::vector<std::vector<double>> profiles;
  for (int s = 0; s < k; ++s) {
    sources.push_back({rng.uniform(box.min_x, box.max_x), rng.uniform(box.min_y, box.max_y)});
    profiles.push_back(rng.simplex(types));
  }
  const double scale = box.diagonal() / (2.0 * std::sqrt(static_cast<double>(k)));
  for (int i = 0; i < n; ++i) {
    Point p = lattice[static_cast<std::size_t>(i)];
    p.x += rng.uniform(-2.0, 2.0);
    p.y += rng.uniform(-2.0, 2.0);
    std::vector<double> mix(types, 0.0);
    if (rng.uniform() < 0.05) {
      mix = rng.simplex(types);
    } else {
      double wsum = 0;
      for (int s = 0; s < k; ++s) {
        const double d = geometry::distance(p, sources[static_cast<std::size_t>(s)]) / scale;
        const double w = std::exp(-4.0 * d * d);
        wsum += w;
        for (std::size_t t = 0; t < types; ++t) mix[t] += w * profiles[static_cast<std::size_t>(s)][t];
      }
      if (wsum <= 0) mix = profiles[0];
      double sum = 0;
      for (auto& v : mix) {
        v = std::max(0.0, v / std::max(wsum, 1e-300) + rng.uniform(-0.02, 0.02));
        sum += v;
      }
      for (auto& v : mix) v /= sum;
    }
    ds.spots.push_back({"spot" + std::to_string(i), p, mix});
  }
  return ds;
}

/// Star-shaped simple polygon around `center`. Jittered even angles keep every
/// angular gap below pi, so the center stays inside and edges never cross.
inline geometry::Polygon random_star(Rng& rng, Point center, double r_min, double r_max, int vertices) {
  std::vector<double> angles;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < vertices; ++i) {
    angles.push_back(phase + 2.0 * std::numbers::pi * (i + rng.uniform(0.0, 0.45)) / vertices);
  }
  geometry::Polygon poly;
  for (double a : angles) {
    const double r = rng.uniform(r_min, r_max);
    poly.exterior.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
  geometry::orient(poly);
  return poly;
}

inline geometry::Polygon random_convex(Rng& rng, Point center, double radius, int points) {
  std::vector<Point> pts;
  for (int i = 0; i < points; ++i) {
    pts.push_back({center.x + rng.uniform(-radius, radius), center.y + rng.uniform(-radius, radius)});
  }
  auto hull = geometry::convex_hull(pts);
  return std::get<geometry::Polygon>(hull);
}

inline geometry::Polygon rect(double x0, double y0, double x1, double y1) {
  return geometry::Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, {}};
}

}  // namespace spothull::testing
