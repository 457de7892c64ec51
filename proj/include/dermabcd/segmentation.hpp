#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "dermabcd/error.hpp"
#include "dermabcd/filter.hpp"
#include "dermabcd/image.hpp"

namespace dermabcd {

inline std::array<std::uint64_t, 256> histogram(const GrayImage& img) {
  std::array<std::uint64_t, 256> h{};
  for (auto v : img.data()) ++h[v];
  return h;
}

namespace detail {
__extension__ typedef unsigned __int128 uint128;
}  // namespace detail

/// Otsu threshold over the 256-bin histogram. Returns the smallest t maximizing
/// the between-class variance of {v <= t} versus {v > t}; a single-intensity
/// image returns that intensity.
inline std::uint8_t otsu_threshold(const GrayImage& img) {
  if (img.empty()) throw std::invalid_argument("otsu_threshold: empty image");
  const auto hist = histogram(img);
  const std::int64_t total = static_cast<std::int64_t>(img.size());
  std::int64_t sum_all = 0;
  for (int i = 0; i < 256; ++i) sum_all += i * static_cast<std::int64_t>(hist[static_cast<std::size_t>(i)]);

  // Between-class variance is proportional to d^2 / (n0 * n1) with
  // d = N * S0 - n0 * S. Candidates are compared by cross-multiplication, in
  // 128-bit integers while that cannot overflow.
  const bool exact = total <= (std::int64_t{1} << 19);
  int best_t = -1;
  detail::uint128 best_num = 0, best_den = 1;
  long double best_val = -1.0L;

  std::int64_t n0 = 0, s0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += static_cast<std::int64_t>(hist[static_cast<std::size_t>(t)]);
    s0 += t * static_cast<std::int64_t>(hist[static_cast<std::size_t>(t)]);
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::int64_t d = total * s0 - n0 * sum_all;
    if (exact) {
      const detail::uint128 ad = static_cast<detail::uint128>(d < 0 ? -d : d);
      const detail::uint128 num = ad * ad;
      const detail::uint128 den = static_cast<detail::uint128>(n0) * static_cast<detail::uint128>(n1);
      if (best_t < 0 || num * best_den > best_num * den) {
        best_t = t;
        best_num = num;
        best_den = den;
      }
    } else {
      const long double ld = static_cast<long double>(d);
      const long double val = ld * ld / (static_cast<long double>(n0) * static_cast<long double>(n1));
      if (best_t < 0 || val > best_val) {
        best_t = t;
        best_val = val;
      }
    }
  }
  if (best_t < 0) {
    // Single intensity.
    for (int i = 0; i < 256; ++i)
      if (hist[static_cast<std::size_t>(i)] != 0) return static_cast<std::uint8_t>(i);
  }
  return static_cast<std::uint8_t>(best_t);
}

/// Foreground where the pixel is at or below the threshold.
inline BinaryMask threshold_below(const GrayImage& img, std::uint8_t t) {
  BinaryMask out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] <= t ? 1 : 0;
  return out;
}

/// Offsets of an elliptical structuring element inscribed in a size x size box,
/// rasterized the same way as the usual imaging-library ellipse.
inline std::vector<Pixel> ellipse_element(int size) {
  std::vector<Pixel> offs;
  const int r = size / 2;
  const double inv_r2 = r > 0 ? 1.0 / (r * r) : 0.0;
  for (int i = 0; i < size; ++i) {
    const int dy = i - r;
    int j1 = 0, j2 = size;
    if (dy != 0) {
      const int dx = static_cast<int>(std::lround(r * std::sqrt((r * r - dy * dy) * inv_r2)));
      j1 = std::max(r - dx, 0);
      j2 = std::min(r + dx + 1, size);
    }
    for (int j = j1; j < j2; ++j) offs.push_back({j - r, dy});
  }
  return offs;
}

/// Erosion; pixels outside the image do not erode.
inline BinaryMask erode(const BinaryMask& m, const std::vector<Pixel>& element) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      bool keep = true;
      for (const auto& o : element) {
        const int xx = x + o.x, yy = y + o.y;
        if (m.contains(xx, yy) && !m.at(xx, yy)) {
          keep = false;
          break;
        }
      }
      out.at(x, y) = keep ? 1 : 0;
    }
  }
  return out;
}

/// Dilation; pixels outside the image count as background.
inline BinaryMask dilate(const BinaryMask& m, const std::vector<Pixel>& element) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      for (const auto& o : element) {
        const int xx = x + o.x, yy = y + o.y;
        if (out.contains(xx, yy)) out.at(xx, yy) = 1;
      }
    }
  }
  return out;
}

inline BinaryMask morph_open(const BinaryMask& m, const std::vector<Pixel>& element) {
  return dilate(erode(m, element), element);
}

inline BinaryMask morph_close(const BinaryMask& m, const std::vector<Pixel>& element) {
  return erode(dilate(m, element), element);
}

/// Background not 4-connected to the image border becomes foreground.
inline BinaryMask fill_holes(const BinaryMask& m) {
  const int w = m.width(), h = m.height();
  Plane<std::uint8_t> outside(w, h, 0);
  std::deque<Pixel> queue;
  auto seed = [&](int x, int y) {
    if (!m.at(x, y) && !outside.at(x, y)) {
      outside.at(x, y) = 1;
      queue.push_back({x, y});
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int xx = p.x + kDx[k], yy = p.y + kDy[k];
      if (m.contains(xx, yy)) seed(xx, yy);
    }
  }
  BinaryMask out(w, h);
  auto o = outside.data();
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = o[i] ? 0 : 1;
  return out;
}

struct Component {
  int label = 0;  // 1-based
  std::size_t area = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

struct ComponentLabels {
  Plane<int> labels;  // 0 = background
  std::vector<Component> components;
};

/// Labels foreground components in row-major discovery order.
inline ComponentLabels label_components(const BinaryMask& m, bool eight_connected = true) {
  ComponentLabels out{Plane<int>(m.width(), m.height(), 0), {}};
  std::deque<Pixel> queue;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y) || out.labels.at(x, y)) continue;
      Component c;
      c.label = static_cast<int>(out.components.size()) + 1;
      c.min_x = c.max_x = x;
      c.min_y = c.max_y = y;
      out.labels.at(x, y) = c.label;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const Pixel p = queue.front();
        queue.pop_front();
        ++c.area;
        c.min_x = std::min(c.min_x, p.x);
        c.max_x = std::max(c.max_x, p.x);
        c.min_y = std::min(c.min_y, p.y);
        c.max_y = std::max(c.max_y, p.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!eight_connected && dx != 0 && dy != 0)) continue;
            const int xx = p.x + dx, yy = p.y + dy;
            if (m.contains(xx, yy) && m.at(xx, yy) && !out.labels.at(xx, yy)) {
              out.labels.at(xx, yy) = c.label;
              queue.push_back({xx, yy});
            }
          }
        }
      }
      out.components.push_back(c);
    }
  }
  return out;
}

/// Number of background regions enclosed by foreground (4-connected background).
inline std::size_t count_holes(const BinaryMask& m) {
  BinaryMask background(m.width(), m.height());
  auto src = m.data();
  auto dst = background.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 0 : 1;
  const auto comps = label_components(background, false);
  std::size_t holes = 0;
  for (const auto& c : comps.components) {
    const bool touches = c.min_x == 0 || c.min_y == 0 || c.max_x == m.width() - 1 ||
                         c.max_y == m.height() - 1;
    holes += touches ? 0 : 1;
  }
  return holes;
}

/// Opening then closing with a 5x5 ellipse, then hole filling.
inline BinaryMask morph_clean(const BinaryMask& m) {
  const auto element = ellipse_element(5);
  return fill_holes(morph_close(morph_open(m, element), element));
}

/// Keeps the largest 8-connected component (ties: smallest bounding-box
/// top-left corner in row-major order) and fills its holes.
inline BinaryMask largest_component_fill(const BinaryMask& m) {
  const auto comps = label_components(m);
  if (comps.components.empty()) {
    throw SegmentationError("segmentation failed: mask has no foreground");
  }
  const Component* best = &comps.components.front();
  for (const auto& c : comps.components) {
    if (c.area > best->area ||
        (c.area == best->area &&
         (c.min_y < best->min_y || (c.min_y == best->min_y && c.min_x < best->min_x)))) {
      best = &c;
    }
  }
  BinaryMask out(m.width(), m.height());
  auto lab = comps.labels.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = lab[i] == best->label ? 1 : 0;
  return fill_holes(out);
}

inline constexpr int kMinSegmentationSide = 32;
inline constexpr double kMaxLesionCoverage = 0.95;

/// Gaussian blur, Otsu (dark = lesion), morphological cleanup and
/// largest-component isolation.
inline BinaryMask segment_lesion(const GrayImage& img) {
  if (img.width() < kMinSegmentationSide || img.height() < kMinSegmentationSide) {
    throw SegmentationError("segment_lesion: image must be at least 32x32");
  }
  const GrayImage blurred = apply_filter(img, FilterKind::Gaussian3Sigma1);
  const std::uint8_t t = otsu_threshold(blurred);
  const BinaryMask cleaned = morph_clean(threshold_below(blurred, t));
  if (cleaned.area() == 0) {
    throw SegmentationError("segmentation failed: mask is empty after cleanup");
  }
  BinaryMask lesion = largest_component_fill(cleaned);
  const double coverage = static_cast<double>(lesion.area()) / static_cast<double>(lesion.size());
  if (coverage > kMaxLesionCoverage) {
    throw SegmentationError("segmentation failed: mask covers " +
                            std::to_string(static_cast<int>(std::lround(coverage * 100))) +
                            "% of the image");
  }
  return lesion;
}

inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("mask_iou: dimension mismatch");
  }
  std::size_t inter = 0, uni = 0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    inter += (da[i] && db[i]) ? 1 : 0;
    uni += (da[i] || db[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace dermabcd
