#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <vector>

#include "dermabcd/distance.hpp"
#include "dermabcd/filter.hpp"
#include "dermabcd/image.hpp"
#include "dermabcd/random.hpp"

namespace dermabcd {

/// Tunables of the four structure detectors. Defaults are the shipped values.
struct StructureOptions {
  // structureless areas
  int variance_window = 5;
  double structureless_max_variance = 20.0;
  // dots / globules
  std::vector<double> log_sigmas = {2.0, 3.0, 4.0, 6.0, 8.0};
  double log_threshold = 0.08;
  int min_blobs = 3;
  // pigment network
  int adaptive_window = 15;
  double adaptive_offset = 5.0;
  int min_branch_points = 20;  // strictly more are required
  // streaks
  double canny_low = 50.0;
  double canny_high = 150.0;
  double hough_rho = 1.0;
  double hough_theta_deg = 1.0;
  int hough_threshold = 10;
  double hough_min_length_fraction = 0.10;  // of the equivalent diameter
  int hough_max_gap = 3;
  double band_fraction = 0.10;  // boundary band radius, of the equivalent diameter
  int min_streak_segments = 5;  // strictly more are required
};

struct Blob {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;
  double response = 0.0;

  double radius() const { return sigma * std::numbers::sqrt2; }
};

struct LineSegment {
  Pixel a;
  Pixel b;
};

struct StructuresResult {
  bool structureless = false;
  bool dots_globules = false;
  bool pigment_network = false;
  bool streaks = false;
  int d_score = 0;

  double median_local_variance = 0.0;
  std::vector<Blob> blobs;
  std::vector<Pixel> branch_points;
  std::vector<LineSegment> segments;
};

inline int d_score(bool structureless, bool dots_globules, bool pigment_network, bool streaks) {
  return int{structureless} + int{dots_globules} + int{pigment_network} + int{streaks};
}

inline double equivalent_diameter(const BinaryMask& mask) {
  return std::sqrt(4.0 * static_cast<double>(mask.area()) / std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Structureless areas

/// Median over mask pixels of the population variance in a window x window
/// neighbourhood (edge replicated). Computed from exact integer sums.
inline double median_local_variance(const GrayImage& gray, const BinaryMask& mask, int window = 5) {
  const int r = window / 2;
  const std::int64_t n = static_cast<std::int64_t>(window) * window;
  std::vector<double> vars;
  vars.reserve(mask.area());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      std::int64_t s = 0, s2 = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const std::int64_t v = gray.clamped(x + dx, y + dy);
          s += v;
          s2 += v * v;
        }
      vars.push_back(static_cast<double>(n * s2 - s * s) / static_cast<double>(n * n));
    }
  }
  if (vars.empty()) return 0.0;
  const std::size_t mid = vars.size() / 2;
  std::nth_element(vars.begin(), vars.begin() + static_cast<std::ptrdiff_t>(mid), vars.end());
  const double upper = vars[mid];
  if (vars.size() % 2 == 1) return upper;
  const double lower = *std::max_element(vars.begin(), vars.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline bool structureless_present(const GrayImage& gray, const BinaryMask& mask,
                                  const StructureOptions& opts = {}) {
  return median_local_variance(gray, mask, opts.variance_window) < opts.structureless_max_variance;
}

// ---------------------------------------------------------------------------
// Dots / globules

/// 5-point Laplacian with edge replication.
inline FloatPlane laplacian(const FloatPlane& img) {
  FloatPlane out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(x, y) = img.clamped(x + 1, y) + img.clamped(x - 1, y) + img.clamped(x, y + 1) +
                     img.clamped(x, y - 1) - 4.0 * img.at(x, y);
  return out;
}

/// Scale-normalized LoG blobs of dark spots inside the mask. A blob is a
/// 3x3x3 scale-space maximum above the threshold whose centre lies at least
/// 2 sigma from the mask edge. Overlapping detections keep the strongest.
inline std::vector<Blob> detect_dark_blobs(const GrayImage& gray, const BinaryMask& mask,
                                           const StructureOptions& opts = {}) {
  std::vector<double> sigmas = opts.log_sigmas;
  std::sort(sigmas.begin(), sigmas.end());
  const FloatPlane unit = to_float(gray, 1.0 / 255.0);
  std::vector<FloatPlane> stack;
  stack.reserve(sigmas.size());
  for (double s : sigmas) {
    FloatPlane lap = laplacian(gaussian_blur(unit, s));
    for (auto& v : lap.data()) v *= s * s;
    stack.push_back(std::move(lap));
  }

  BinaryMask background(mask.width(), mask.height());
  {
    auto m = mask.data();
    auto b = background.data();
    for (std::size_t i = 0; i < m.size(); ++i) b[i] = m[i] ? 0 : 1;
  }
  const FloatPlane edge_d2 = squared_distance_to(background);

  std::vector<Blob> candidates;
  const int ns = static_cast<int>(stack.size());
  for (int s = 0; s < ns; ++s) {
    const auto& layer = stack[static_cast<std::size_t>(s)];
    const double min_d = 2.0 * sigmas[static_cast<std::size_t>(s)];
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) {
        const double v = layer.at(x, y);
        if (v <= opts.log_threshold || !mask.at(x, y) || edge_d2.at(x, y) < min_d * min_d) continue;
        bool is_max = true;
        // Ties are broken towards the first position in (scale, row, column) order.
        for (int ds = -1; ds <= 1 && is_max; ++ds) {
          const int ss = s + ds;
          if (ss < 0 || ss >= ns) continue;
          const auto& other = stack[static_cast<std::size_t>(ss)];
          for (int dy = -1; dy <= 1 && is_max; ++dy)
            for (int dx = -1; dx <= 1 && is_max; ++dx) {
              if (ds == 0 && dy == 0 && dx == 0) continue;
              if (!other.contains(x + dx, y + dy)) continue;
              const double o = other.at(x + dx, y + dy);
              const bool earlier = ds < 0 || (ds == 0 && (dy < 0 || (dy == 0 && dx < 0)));
              if (o > v || (earlier && o == v)) is_max = false;
            }
        }
        if (is_max) candidates.push_back({double(x), double(y), sigmas[static_cast<std::size_t>(s)], v});
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Blob& a, const Blob& b) { return a.response > b.response; });
  std::vector<Blob> kept;
  for (const auto& c : candidates) {
    bool overlaps = false;
    for (const auto& k : kept) {
      const double d = std::hypot(c.x - k.x, c.y - k.y);
      if (d < std::max(c.radius(), k.radius())) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) kept.push_back(c);
  }
  return kept;
}

inline bool dots_globules_present(const GrayImage& gray, const BinaryMask& mask,
                                  const StructureOptions& opts = {}) {
  return static_cast<int>(detect_dark_blobs(gray, mask, opts).size()) >= opts.min_blobs;
}

// ---------------------------------------------------------------------------
// Pigment network

/// Mask pixels darker than their local window mean minus the offset.
inline BinaryMask dark_network(const GrayImage& gray, const BinaryMask& mask, int window, double offset) {
  const FloatPlane mean = box_mean(to_float(gray), window / 2);
  BinaryMask out(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y)
    for (int x = 0; x < gray.width(); ++x)
      out.at(x, y) = (mask.at(x, y) && gray.at(x, y) < mean.at(x, y) - offset) ? 1 : 0;
  return out;
}

/// Zhang-Suen thinning; pixels off the image count as background.
inline BinaryMask skeletonize(const BinaryMask& input) {
  BinaryMask img = input;
  const int w = img.width(), h = img.height();
  auto px = [&](int x, int y) -> int { return img.test(x, y) ? 1 : 0; };
  std::vector<Pixel> to_clear;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      to_clear.clear();
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!img.at(x, y)) continue;
          // P2..P9 clockwise from north.
          const int p[8] = {px(x, y - 1), px(x + 1, y - 1), px(x + 1, y),     px(x + 1, y + 1),
                            px(x, y + 1), px(x - 1, y + 1), px(x - 1, y),     px(x - 1, y - 1)};
          int neighbours = 0, transitions = 0;
          for (int i = 0; i < 8; ++i) {
            neighbours += p[i];
            transitions += (p[i] == 0 && p[(i + 1) % 8] == 1) ? 1 : 0;
          }
          if (neighbours < 2 || neighbours > 6 || transitions != 1) continue;
          const bool ok = pass == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                    : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
          if (ok) to_clear.push_back({x, y});
        }
      }
      for (const auto& q : to_clear) img.at(q.x, q.y) = 0;
      changed = changed || !to_clear.empty();
    }
  }
  return img;
}

/// Skeleton pixels with three or more skeleton 8-neighbours.
inline std::vector<Pixel> branch_points(const BinaryMask& skeleton) {
  std::vector<Pixel> out;
  for (int y = 0; y < skeleton.height(); ++y)
    for (int x = 0; x < skeleton.width(); ++x) {
      if (!skeleton.at(x, y)) continue;
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) n += ((dx || dy) && skeleton.test(x + dx, y + dy)) ? 1 : 0;
      if (n >= 3) out.push_back({x, y});
    }
  return out;
}

inline std::vector<Pixel> network_branch_points(const GrayImage& gray, const BinaryMask& mask,
                                                const StructureOptions& opts = {}) {
  return branch_points(skeletonize(dark_network(gray, mask, opts.adaptive_window, opts.adaptive_offset)));
}

inline bool pigment_network_present(const GrayImage& gray, const BinaryMask& mask,
                                    const StructureOptions& opts = {}) {
  return static_cast<int>(network_branch_points(gray, mask, opts).size()) > opts.min_branch_points;
}

// ---------------------------------------------------------------------------
// Streaks

/// Canny edge map: 3x3 Sobel, L1 magnitude, non-maximum suppression and
/// hysteresis between the two thresholds.
inline BinaryMask canny(const GrayImage& gray, double low, double high) {
  const int w = gray.width(), h = gray.height();
  FloatPlane gx(w, h), gy(w, h), mag(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto g = [&](int dx, int dy) -> double { return gray.clamped(x + dx, y + dy); };
      const double sx = (g(1, -1) + 2 * g(1, 0) + g(1, 1)) - (g(-1, -1) + 2 * g(-1, 0) + g(-1, 1));
      const double sy = (g(-1, 1) + 2 * g(0, 1) + g(1, 1)) - (g(-1, -1) + 2 * g(0, -1) + g(1, -1));
      gx.at(x, y) = sx;
      gy.at(x, y) = sy;
      mag.at(x, y) = std::abs(sx) + std::abs(sy);
    }
  const double tan22 = std::tan(std::numbers::pi / 8.0);
  // 0 = suppressed, 1 = weak, 2 = strong
  Plane<std::uint8_t> cls(w, h, 0);
  std::deque<Pixel> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = mag.at(x, y);
      if (m <= low) continue;
      auto at = [&](int xx, int yy) { return mag.contains(xx, yy) ? mag.at(xx, yy) : 0.0; };
      const double ax = std::abs(gx.at(x, y)), ay = std::abs(gy.at(x, y));
      double n1, n2;
      if (ay <= tan22 * ax) {
        n1 = at(x - 1, y);
        n2 = at(x + 1, y);
      } else if (ax <= tan22 * ay) {
        n1 = at(x, y - 1);
        n2 = at(x, y + 1);
      } else if ((gx.at(x, y) > 0) == (gy.at(x, y) > 0)) {
        n1 = at(x - 1, y - 1);
        n2 = at(x + 1, y + 1);
      } else {
        n1 = at(x + 1, y - 1);
        n2 = at(x - 1, y + 1);
      }
      if (!(m > n1 && m >= n2)) continue;
      if (m > high) {
        cls.at(x, y) = 2;
        queue.push_back({x, y});
      } else {
        cls.at(x, y) = 1;
      }
    }
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = p.x + dx, yy = p.y + dy;
        if (cls.contains(xx, yy) && cls.at(xx, yy) == 1) {
          cls.at(xx, yy) = 2;
          queue.push_back({xx, yy});
        }
      }
  }
  BinaryMask edges(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) edges.at(x, y) = cls.at(x, y) == 2 ? 1 : 0;
  return edges;
}

struct HoughOptions {
  double rho = 1.0;
  double theta = std::numbers::pi / 180.0;
  int threshold = 10;
  double min_length = 10.0;
  int max_gap = 3;
};

/// Progressive probabilistic Hough transform. Edge points are visited in a
/// seeded random order; a point whose best accumulator bin reaches the
/// threshold seeds a walk along that line in both directions, tolerating at
/// most max_gap missing pixels. Walked points leave the edge set, and points
/// of accepted segments are also removed from the accumulator.
inline std::vector<LineSegment> hough_segments(const BinaryMask& edges, const HoughOptions& opts,
                                               std::uint64_t seed) {
  const int w = edges.width(), h = edges.height();
  const int numangle = static_cast<int>(std::lround(std::numbers::pi / opts.theta));
  const int numrho = static_cast<int>(std::lround(((w + h) * 2 + 1) / opts.rho));
  std::vector<int> accum(static_cast<std::size_t>(numangle) * static_cast<std::size_t>(numrho), 0);
  std::vector<double> cosv(static_cast<std::size_t>(numangle)), sinv(static_cast<std::size_t>(numangle));
  for (int n = 0; n < numangle; ++n) {
    cosv[static_cast<std::size_t>(n)] = std::cos(n * opts.theta) / opts.rho;
    sinv[static_cast<std::size_t>(n)] = std::sin(n * opts.theta) / opts.rho;
  }
  auto bin = [&](int n, int x, int y) -> int& {
    const int r = static_cast<int>(std::lround(x * cosv[static_cast<std::size_t>(n)] + y * sinv[static_cast<std::size_t>(n)])) +
                  (numrho - 1) / 2;
    return accum[static_cast<std::size_t>(n) * static_cast<std::size_t>(numrho) + static_cast<std::size_t>(r)];
  };

  Plane<std::uint8_t> live(w, h, 0);
  std::vector<Pixel> points;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (edges.at(x, y)) {
        live.at(x, y) = 1;
        points.push_back({x, y});
      }

  Rng rng(seed);
  std::vector<LineSegment> lines;
  constexpr int shift = 16;
  for (std::size_t count = points.size(); count > 0; --count) {
    const auto idx = static_cast<std::size_t>(rng.below(count));
    const Pixel pt = points[idx];
    points[idx] = points[count - 1];
    if (!live.at(pt.x, pt.y)) continue;

    int max_val = opts.threshold - 1, max_n = 0;
    for (int n = 0; n < numangle; ++n) {
      const int val = ++bin(n, pt.x, pt.y);
      if (max_val < val) {
        max_val = val;
        max_n = n;
      }
    }
    if (max_val < opts.threshold) continue;

    // Walk along the line in fixed point, stepping one pixel along the
    // dominant axis.
    const double a = -sinv[static_cast<std::size_t>(max_n)] * opts.rho;
    const double b = cosv[static_cast<std::size_t>(max_n)] * opts.rho;
    int x0 = pt.x, y0 = pt.y, dx0, dy0;
    const bool xflag = std::abs(a) > std::abs(b);
    if (xflag) {
      dx0 = a > 0 ? 1 : -1;
      dy0 = static_cast<int>(std::lround(b * (1 << shift) / std::abs(a)));
      y0 = (y0 << shift) + (1 << (shift - 1));
    } else {
      dy0 = b > 0 ? 1 : -1;
      dx0 = static_cast<int>(std::lround(a * (1 << shift) / std::abs(b)));
      x0 = (x0 << shift) + (1 << (shift - 1));
    }
    auto to_pixel = [&](int x, int y) -> Pixel {
      return xflag ? Pixel{x, y >> shift} : Pixel{x >> shift, y};
    };

    std::array<Pixel, 2> ends = {pt, pt};
    for (int k = 0; k < 2; ++k) {
      int gap = 0, x = x0, y = y0, dx = k ? -dx0 : dx0, dy = k ? -dy0 : dy0;
      for (;; x += dx, y += dy) {
        const Pixel p = to_pixel(x, y);
        if (!live.contains(p.x, p.y)) break;
        if (live.at(p.x, p.y)) {
          gap = 0;
          ends[static_cast<std::size_t>(k)] = p;
        } else if (++gap > opts.max_gap) {
          break;
        }
      }
    }
    const bool good = std::abs(ends[1].x - ends[0].x) >= opts.min_length ||
                      std::abs(ends[1].y - ends[0].y) >= opts.min_length;

    for (int k = 0; k < 2; ++k) {
      int x = x0, y = y0, dx = k ? -dx0 : dx0, dy = k ? -dy0 : dy0;
      for (;; x += dx, y += dy) {
        const Pixel p = to_pixel(x, y);
        if (live.at(p.x, p.y)) {
          if (good)
            for (int n = 0; n < numangle; ++n) --bin(n, p.x, p.y);
          live.at(p.x, p.y) = 0;
        }
        if (p == ends[static_cast<std::size_t>(k)]) break;
      }
    }
    if (good) lines.push_back({ends[0], ends[1]});
  }
  return lines;
}

/// Pixels within `radius` of the mask boundary.
inline BinaryMask boundary_band(const BinaryMask& mask, double radius) {
  const FloatPlane d2 = squared_distance_to(mask_boundary(mask));
  BinaryMask band(mask.width(), mask.height());
  auto src = d2.data();
  auto dst = band.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] <= radius * radius ? 1 : 0;
  return band;
}

inline std::vector<LineSegment> streak_segments(const GrayImage& gray, const BinaryMask& mask,
                                                const StructureOptions& opts = {},
                                                std::uint64_t seed = 0) {
  const double diameter = equivalent_diameter(mask);
  const BinaryMask band = boundary_band(mask, opts.band_fraction * diameter);
  BinaryMask edges = canny(gray, opts.canny_low, opts.canny_high);
  auto e = edges.data();
  auto bd = band.data();
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = (e[i] && bd[i]) ? 1 : 0;
  HoughOptions h;
  h.rho = opts.hough_rho;
  h.theta = opts.hough_theta_deg * std::numbers::pi / 180.0;
  h.threshold = opts.hough_threshold;
  h.min_length = opts.hough_min_length_fraction * diameter;
  h.max_gap = opts.hough_max_gap;
  return hough_segments(edges, h, seed);
}

inline bool streaks_present(const GrayImage& gray, const BinaryMask& mask,
                            const StructureOptions& opts = {}, std::uint64_t seed = 0) {
  return static_cast<int>(streak_segments(gray, mask, opts, seed).size()) > opts.min_streak_segments;
}

// ---------------------------------------------------------------------------

inline StructuresResult detect_structures(const GrayImage& gray, const BinaryMask& mask,
                                          const StructureOptions& opts = {}, std::uint64_t seed = 0) {
  StructuresResult r;
  r.median_local_variance = median_local_variance(gray, mask, opts.variance_window);
  r.structureless = r.median_local_variance < opts.structureless_max_variance;
  r.blobs = detect_dark_blobs(gray, mask, opts);
  r.dots_globules = static_cast<int>(r.blobs.size()) >= opts.min_blobs;
  r.branch_points = network_branch_points(gray, mask, opts);
  r.pigment_network = static_cast<int>(r.branch_points.size()) > opts.min_branch_points;
  r.segments = streak_segments(gray, mask, opts, seed);
  r.streaks = static_cast<int>(r.segments.size()) > opts.min_streak_segments;
  r.d_score = d_score(r.structureless, r.dots_globules, r.pigment_network, r.streaks);
  return r;
}

}  // namespace dermabcd
