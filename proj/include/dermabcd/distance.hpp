#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "dermabcd/image.hpp"

namespace dermabcd {

namespace detail {

// 1-D squared distance transform by lower envelope of parabolas. Infinite
// entries of f are not sources.
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(f.size());
  auto at = [](auto& vec, int i) -> auto& { return vec[static_cast<std::size_t>(i)]; };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (at(f, q) == inf) continue;
    if (k < 0) {
      k = 0;
      at(v, 0) = q;
      at(z, 0) = -inf;
      at(z, 1) = inf;
      continue;
    }
    double s = 0.0;
    for (;;) {
      const int p = at(v, k);
      s = ((at(f, q) + q * q) - (at(f, p) + p * p)) / (2.0 * (q - p));
      if (s > at(z, k)) break;
      --k;
    }
    ++k;
    at(v, k) = q;
    at(z, k) = s;
    at(z, k + 1) = inf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) at(d, q) = inf;
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (at(z, k + 1) < q) ++k;
    const int p = at(v, k);
    at(d, q) = static_cast<double>(q - p) * (q - p) + at(f, p);
  }
}

}  // namespace detail

/// Exact squared Euclidean distance from every pixel to the nearest pixel
/// where `sources` is set. Infinity when there are no sources.
inline FloatPlane squared_distance_to(const BinaryMask& sources) {
  const int w = sources.width(), h = sources.height();
  constexpr double inf = std::numeric_limits<double>::infinity();
  FloatPlane out(w, h, inf);
  const int n = std::max(w, h);
  std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);

  for (int x = 0; x < w; ++x) {
    f.resize(static_cast<std::size_t>(h));
    d.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = sources.at(x, y) ? 0.0 : inf;
    detail::edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) out.at(x, y) = d[static_cast<std::size_t>(y)];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(static_cast<std::size_t>(w));
    d.resize(static_cast<std::size_t>(w));
    for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = out.at(x, y);
    detail::edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) out.at(x, y) = d[static_cast<std::size_t>(x)];
  }
  return out;
}

/// Foreground pixels with at least one background or off-image 8-neighbour.
inline BinaryMask mask_boundary(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      bool edge = false;
      for (int dy = -1; dy <= 1 && !edge; ++dy)
        for (int dx = -1; dx <= 1 && !edge; ++dx)
          if ((dx || dy) && !mask.test(x + dx, y + dy)) edge = true;
      out.at(x, y) = edge ? 1 : 0;
    }
  }
  return out;
}

}  // namespace dermabcd
