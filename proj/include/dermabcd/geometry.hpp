#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dermabcd/error.hpp"
#include "dermabcd/image.hpp"

namespace dermabcd {

inline constexpr double kAsymmetryThreshold = 0.15;
inline constexpr double kBorderGradientThreshold = 10.0;
inline constexpr int kRadialSegments = 8;

struct AsymmetryResult {
  double angle = 0.0;    // principal axis, radians in [0, pi), image coordinates (y down)
  double d_major = 0.0;  // 1 - IoU for reflection across the major axis
  double d_minor = 0.0;  // 1 - IoU for reflection across the minor axis
  int a_score = 0;
};

struct BorderResult {
  std::array<Pixel, kRadialSegments> points{};
  std::array<double, kRadialSegments> gradients{};
  int b_score = 0;
};

struct Centroid {
  double x = 0.0;
  double y = 0.0;
};

inline Centroid mask_centroid(const BinaryMask& mask) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) {
        sx += x;
        sy += y;
        ++n;
      }
  if (n == 0) throw FeatureError("mask has no foreground");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

/// Orientation of the dominant eigenvector of the foreground coordinate
/// covariance, normalized to [0, pi).
inline double principal_axis(const BinaryMask& mask) {
  if (mask.area() < 2) throw FeatureError("principal_axis: need at least 2 foreground pixels");
  const Centroid c = mask_centroid(mask);
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) {
        const double dx = x - c.x, dy = y - c.y;
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
      }
  double angle = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
  if (angle < 0.0) angle += std::numbers::pi;
  if (angle >= std::numbers::pi) angle -= std::numbers::pi;
  return angle;
}

/// Rotates the mask by -angle about its centroid onto a square canvas large
/// enough to hold every foreground pixel. Nearest-neighbour inverse mapping.
inline BinaryMask rotate_to_axis(const BinaryMask& mask, double angle) {
  const Centroid c = mask_centroid(mask);
  double max_r2 = 0.0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) max_r2 = std::max(max_r2, (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y));
  const int half = static_cast<int>(std::ceil(std::sqrt(max_r2))) + 2;
  const int side = 2 * half + 1;
  const double cs = std::cos(angle), sn = std::sin(angle);
  BinaryMask out(side, side);
  for (int v = 0; v < side; ++v) {
    for (int u = 0; u < side; ++u) {
      const double ox = u - half, oy = v - half;
      const double sx = c.x + ox * cs - oy * sn;
      const double sy = c.y + ox * sn + oy * cs;
      const int ix = static_cast<int>(std::lround(sx));
      const int iy = static_cast<int>(std::lround(sy));
      if (mask.test(ix, iy)) out.at(u, v) = 1;
    }
  }
  return out;
}

enum class ReflectionAxis {
  Horizontal,  // line y = pos, halves are above and below
  Vertical,    // line x = pos, halves are left and right
};

/// 1 - IoU between the half on one side of the axis and the mirror image of
/// the other half. The axis is snapped to the nearest half-pixel so mirroring
/// maps pixel centres onto pixel centres; pixels lying on the axis belong to
/// neither half. Two empty halves count as symmetric.
inline double reflection_asymmetry(const BinaryMask& mask, ReflectionAxis axis, double pos) {
  const long twice = std::lround(2.0 * pos);
  std::size_t inter = 0, uni = 0;
  const bool horiz = axis == ReflectionAxis::Horizontal;
  // Visit every pixel of the first half (coordinate below the axis) and its
  // mirror, plus mirrors of second-half pixels that fall outside the mask.
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const long coord = horiz ? y : x;
      if (2 * coord >= twice) continue;
      const long mirror = twice - coord;
      const bool a = mask.at(x, y) != 0;
      const bool b = horiz ? mask.test(x, static_cast<int>(mirror)) : mask.test(static_cast<int>(mirror), y);
      inter += (a && b) ? 1 : 0;
      uni += (a || b) ? 1 : 0;
    }
  }
  // Second-half pixels whose mirror lies outside the raster.
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const long coord = horiz ? y : x;
      if (2 * coord <= twice || !mask.at(x, y)) continue;
      const long mirror = twice - coord;
      if (mirror < 0) ++uni;
    }
  }
  return uni == 0 ? 0.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

inline int a_score(double d_major, double d_minor) {
  return (d_major > kAsymmetryThreshold ? 1 : 0) + (d_minor > kAsymmetryThreshold ? 1 : 0);
}

/// Aligns the principal axis with the x axis, then measures reflection
/// asymmetry about the major and minor axes through the centroid.
inline AsymmetryResult axis_asymmetry(const BinaryMask& mask) {
  AsymmetryResult r;
  r.angle = principal_axis(mask);
  const BinaryMask aligned = rotate_to_axis(mask, r.angle);
  const Centroid c = mask_centroid(aligned);
  r.d_major = reflection_asymmetry(aligned, ReflectionAxis::Horizontal, c.y);
  r.d_minor = reflection_asymmetry(aligned, ReflectionAxis::Vertical, c.x);
  r.a_score = a_score(r.d_major, r.d_minor);
  return r;
}

/// Grid step for ray k (k * 45 degrees, measured from +x towards +y).
inline Pixel radial_step(int k) {
  static constexpr std::array<Pixel, kRadialSegments> kSteps = {{
      {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
  }};
  return kSteps[static_cast<std::size_t>(k % kRadialSegments)];
}

inline Pixel rounded_centroid(const BinaryMask& mask) {
  const Centroid c = mask_centroid(mask);
  return {static_cast<int>(std::lround(c.x)), static_cast<int>(std::lround(c.y))};
}

/// For each of the eight rays from the centroid, the farthest foreground pixel
/// on the ray before it leaves the image.
inline std::array<Pixel, kRadialSegments> radial_boundary_points(const BinaryMask& mask) {
  const Pixel c = rounded_centroid(mask);
  if (!mask.test(c.x, c.y)) {
    throw FeatureError("lesion centroid lies outside the mask; border score undefined");
  }
  std::array<Pixel, kRadialSegments> pts{};
  for (int k = 0; k < kRadialSegments; ++k) {
    const Pixel step = radial_step(k);
    Pixel last = c;
    for (Pixel p = c; mask.contains(p.x, p.y); p = {p.x + step.x, p.y + step.y}) {
      if (mask.at(p.x, p.y)) last = p;
    }
    pts[static_cast<std::size_t>(k)] = last;
  }
  return pts;
}

inline constexpr int kBorderPatchSamples = 5;

/// |mean inside - mean outside| over samples at offsets 1..5 along -direction
/// and +direction from the boundary pixel. Samples off the image are skipped.
inline double segment_gradient(const GrayImage& gray, Pixel point, double dir_x, double dir_y,
                               int samples = kBorderPatchSamples) {
  double sum_in = 0.0, sum_out = 0.0;
  int n_in = 0, n_out = 0;
  for (int s = 1; s <= samples; ++s) {
    const int ix = static_cast<int>(std::lround(point.x - s * dir_x));
    const int iy = static_cast<int>(std::lround(point.y - s * dir_y));
    if (gray.contains(ix, iy)) {
      sum_in += gray.at(ix, iy);
      ++n_in;
    }
    const int ox = static_cast<int>(std::lround(point.x + s * dir_x));
    const int oy = static_cast<int>(std::lround(point.y + s * dir_y));
    if (gray.contains(ox, oy)) {
      sum_out += gray.at(ox, oy);
      ++n_out;
    }
  }
  if (n_in == 0 || n_out == 0) return 0.0;
  return std::abs(sum_in / n_in - sum_out / n_out);
}

template <typename Range>
int b_score(const Range& gradients) {
  int n = 0;
  std::size_t count = 0;
  for (double g : gradients) {
    n += g > kBorderGradientThreshold ? 1 : 0;
    ++count;
  }
  if (count != kRadialSegments) throw std::invalid_argument("b_score: expected 8 gradients");
  return n;
}

inline BorderResult border_irregularity(const GrayImage& gray, const BinaryMask& mask,
                                        int samples = kBorderPatchSamples) {
  BorderResult r;
  r.points = radial_boundary_points(mask);
  for (int k = 0; k < kRadialSegments; ++k) {
    const double theta = k * std::numbers::pi / 4.0;
    r.gradients[static_cast<std::size_t>(k)] =
        segment_gradient(gray, r.points[static_cast<std::size_t>(k)], std::cos(theta), std::sin(theta), samples);
  }
  r.b_score = b_score(r.gradients);
  return r;
}

}  // namespace dermabcd
