#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "dermabcd/color.hpp"
#include "dermabcd/error.hpp"
#include "dermabcd/image.hpp"
#include "dermabcd/random.hpp"

namespace dermabcd {

struct ColorCluster {
  LabPixel center;
  std::size_t pixel_count = 0;
  double fraction = 0.0;  // of the clustered lesion area
};

struct ColorResult {
  std::vector<ColorCluster> clusters;
  int c_score = 1;
};

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-4;
};

struct KMeansResult {
  std::vector<ColorCluster> clusters;  // non-empty clusters, in center order
  std::vector<int> labels;             // index into the full center list
  std::vector<LabPixel> centers;
  std::vector<double> objective;       // sum of squared distances after each assignment
  int iterations = 0;
};

namespace detail {

inline std::size_t count_distinct(std::span<const LabPixel> pixels, std::size_t cap) {
  std::vector<LabPixel> sorted(pixels.begin(), pixels.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t n = 0;
  for (std::size_t i = 0; i < sorted.size() && n < cap; ++i) {
    if (i == 0 || !(sorted[i] == sorted[i - 1])) ++n;
  }
  return n;
}

inline std::size_t nearest_center(const LabPixel& p, const std::vector<LabPixel>& centers,
                                  double* dist_sq) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = lab_distance_sq(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist_sq) *dist_sq = best_d;
  return best;
}

// k-means++ seeding: first center uniform, the rest drawn with probability
// proportional to squared distance from the nearest chosen center.
inline std::vector<LabPixel> seed_centers(std::span<const LabPixel> pixels, std::size_t k, Rng& rng) {
  std::vector<LabPixel> centers;
  centers.reserve(k);
  centers.push_back(pixels[static_cast<std::size_t>(rng.below(pixels.size()))]);
  std::vector<double> d2(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) d2[i] = lab_distance_sq(pixels[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    const double target = rng.uniform() * total;
    std::size_t pick = pixels.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      if (d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc > target) break;
    }
    centers.push_back(pixels[pick]);
    for (std::size_t i = 0; i < pixels.size(); ++i)
      d2[i] = std::min(d2[i], lab_distance_sq(pixels[i], centers.back()));
  }
  return centers;
}

}  // namespace detail

/// Lloyd's algorithm in LAB with deterministic k-means++ seeding. The
/// effective k is capped by the number of distinct pixels.
inline KMeansResult kmeans_lab(std::span<const LabPixel> pixels, int k, std::uint64_t seed,
                               const KMeansOptions& opts = {}) {
  if (pixels.empty()) throw FeatureError("kmeans_lab: no pixels to cluster");
  if (k < 1) throw std::invalid_argument("kmeans_lab: k must be at least 1");
  const std::size_t kk = detail::count_distinct(pixels, static_cast<std::size_t>(k));

  Rng rng(seed);
  KMeansResult res;
  res.centers = detail::seed_centers(pixels, kk, rng);
  res.labels.assign(pixels.size(), 0);
  std::vector<double> dist(pixels.size());
  std::vector<double> sums(kk * 3);
  std::vector<std::size_t> counts(kk);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    double objective = 0.0;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      res.labels[i] = static_cast<int>(detail::nearest_center(pixels[i], res.centers, &dist[i]));
      objective += dist[i];
    }
    res.objective.push_back(objective);
    res.iterations = iter + 1;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const auto c = static_cast<std::size_t>(res.labels[i]);
      sums[3 * c] += pixels[i].L;
      sums[3 * c + 1] += pixels[i].a;
      sums[3 * c + 2] += pixels[i].b;
      ++counts[c];
    }
    double movement = 0.0;
    bool reseeded = false;
    for (std::size_t c = 0; c < kk; ++c) {
      LabPixel next = res.centers[c];
      if (counts[c] > 0) {
        const double n = static_cast<double>(counts[c]);
        next = {sums[3 * c] / n, sums[3 * c + 1] / n, sums[3 * c + 2] / n};
      } else {
        // Move the empty center onto the point worst served by its center.
        std::size_t far = 0;
        for (std::size_t i = 1; i < pixels.size(); ++i)
          if (dist[i] > dist[far]) far = i;
        next = pixels[far];
        dist[far] = 0.0;
        reseeded = true;
      }
      movement = std::max(movement, lab_distance(next, res.centers[c]));
      res.centers[c] = next;
    }
    if (!reseeded && movement < opts.tolerance) break;
  }

  // Final assignment against the final centers.
  std::vector<std::size_t> final_counts(kk, 0);
  std::fill(sums.begin(), sums.end(), 0.0);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto c = detail::nearest_center(pixels[i], res.centers, nullptr);
    res.labels[i] = static_cast<int>(c);
    ++final_counts[c];
  }
  const double total = static_cast<double>(pixels.size());
  for (std::size_t c = 0; c < kk; ++c) {
    if (final_counts[c] == 0) continue;
    res.clusters.push_back({res.centers[c], final_counts[c], static_cast<double>(final_counts[c]) / total});
  }
  return res;
}

inline constexpr double kMinClusterFraction = 0.05;
inline constexpr double kClusterMergeDistance = 10.0;
inline constexpr int kColorClusters = 5;
inline constexpr int kMaxColorScore = 6;

inline std::vector<ColorCluster> significant_clusters(std::span<const ColorCluster> clusters,
                                                      double min_fraction = kMinClusterFraction) {
  std::vector<ColorCluster> out;
  for (const auto& c : clusters)
    if (c.fraction >= min_fraction) out.push_back(c);
  return out;
}

/// Repeatedly merges the closest pair closer than `distance` into its
/// count-weighted mean. Ties go to the pair with the lowest indices; the
/// merged cluster takes the lower index.
inline std::vector<ColorCluster> merge_close_clusters(std::vector<ColorCluster> clusters,
                                                      double distance = kClusterMergeDistance) {
  for (;;) {
    std::size_t bi = 0, bj = 0;
    double best = distance;
    bool found = false;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = lab_distance(clusters[i].center, clusters[j].center);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found) return clusters;
    ColorCluster& a = clusters[bi];
    const ColorCluster& b = clusters[bj];
    const double na = static_cast<double>(a.pixel_count), nb = static_cast<double>(b.pixel_count);
    const double n = na + nb;
    if (n > 0.0) {
      a.center = {(a.center.L * na + b.center.L * nb) / n, (a.center.a * na + b.center.a * nb) / n,
                  (a.center.b * na + b.center.b * nb) / n};
    }
    a.pixel_count += b.pixel_count;
    a.fraction += b.fraction;
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
}

struct ColorOptions {
  int clusters = kColorClusters;
  double min_fraction = kMinClusterFraction;
  double merge_distance = kClusterMergeDistance;
  KMeansOptions kmeans;
};

/// LAB values of the masked pixels in row-major order.
inline std::vector<LabPixel> masked_lab_pixels(const ImageBuffer& image, const BinaryMask& mask) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw std::invalid_argument("image and mask dimensions differ");
  }
  std::vector<LabPixel> px;
  px.reserve(mask.area());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      if (image.channels() == 3) {
        px.push_back(rgb_to_lab(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2)));
      } else {
        const auto v = image.at(x, y, 0);
        px.push_back(rgb_to_lab(v, v, v));
      }
    }
  }
  return px;
}

inline ColorResult color_score(const ImageBuffer& image, const BinaryMask& mask, std::uint64_t seed,
                               const ColorOptions& opts = {}) {
  const auto pixels = masked_lab_pixels(image, mask);
  if (pixels.empty()) throw FeatureError("color_score: empty mask");
  const auto km = kmeans_lab(pixels, opts.clusters, seed, opts.kmeans);
  ColorResult r;
  r.clusters = merge_close_clusters(significant_clusters(km.clusters, opts.min_fraction), opts.merge_distance);
  r.c_score = std::clamp(static_cast<int>(r.clusters.size()), 1, kMaxColorScore);
  return r;
}

}  // namespace dermabcd
