#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <type_traits>

#include "dermabcd/image.hpp"

namespace dermabcd::draw {

using Rgb = std::array<std::uint8_t, 3>;

inline void put(ImageBuffer& img, int x, int y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
  for (int ch = 0; ch < img.channels(); ++ch) img.at(x, y, ch) = c[static_cast<std::size_t>(ch)];
}

inline void fill(ImageBuffer& img, const Rgb& c) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) put(img, x, y, c);
}

/// Pixels whose centre lies within `radius` of (cx, cy).
template <typename Raster, typename Value>
void fill_disk(Raster& img, double cx, double cy, double radius, const Value& v) {
  const int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
  const int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > radius * radius) continue;
      if constexpr (std::is_same_v<Raster, ImageBuffer>) {
        put(img, x, y, v);
      } else {
        if (img.contains(x, y)) img.at(x, y) = v;
      }
    }
}

/// Bresenham line with a square pen of the given width.
template <typename Raster, typename Value>
void line(Raster& img, int x0, int y0, int x1, int y1, const Value& v, int width = 1) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  const int lo = -(width - 1) / 2, hi = width / 2;
  for (;;) {
    for (int oy = lo; oy <= hi; ++oy)
      for (int ox = lo; ox <= hi; ++ox) {
        if constexpr (std::is_same_v<Raster, ImageBuffer>) {
          put(img, x0 + ox, y0 + oy, v);
        } else {
          if (img.contains(x0 + ox, y0 + oy)) img.at(x0 + ox, y0 + oy) = v;
        }
      }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

inline void circle_outline(ImageBuffer& img, double cx, double cy, double r, const Rgb& c) {
  const int steps = std::max(16, static_cast<int>(2 * std::numbers::pi * r));
  for (int i = 0; i < steps; ++i) {
    const double t = 2 * std::numbers::pi * i / steps;
    put(img, static_cast<int>(std::lround(cx + r * std::cos(t))), static_cast<int>(std::lround(cy + r * std::sin(t))), c);
  }
}

}  // namespace dermabcd::draw
