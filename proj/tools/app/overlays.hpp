#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "dermabcd/color.hpp"
#include "dermabcd/distance.hpp"
#include "dermabcd/draw.hpp"
#include "dermabcd/geometry.hpp"
#include "dermabcd/pipeline.hpp"

#include "codec.hpp"

namespace dermabcd::app {

inline constexpr draw::Rgb kOutline = {0, 255, 0};

inline ImageBuffer with_outline(const ImageBuffer& image, const BinaryMask& mask) {
  ImageBuffer out = image;
  const BinaryMask edge = mask_boundary(mask);
  for (int y = 0; y < edge.height(); ++y)
    for (int x = 0; x < edge.width(); ++x)
      if (edge.at(x, y)) draw::put(out, x, y, kOutline);
  return out;
}

/// One horizontal band per surviving cluster, filled with its mean colour.
/// Band widths are proportional to the cluster's pixel fraction.
inline ImageBuffer cluster_swatch(const ColorResult& color, int width = 256, int band = 32) {
  const int rows = std::max<int>(1, static_cast<int>(color.clusters.size()));
  ImageBuffer img(width, rows * band, 3, 255);
  for (std::size_t i = 0; i < color.clusters.size(); ++i) {
    const auto& c = color.clusters[i];
    const auto rgb = lab_to_rgb(c.center);
    const int w = std::clamp(static_cast<int>(std::lround(c.fraction * width)), 1, width);
    for (int y = 0; y < band; ++y)
      for (int x = 0; x < w; ++x) draw::put(img, x, static_cast<int>(i) * band + y, rgb);
  }
  return img;
}

/// Lesion outline, the eight radial rays and their boundary points.
/// Rays whose border gradient exceeds the threshold are red, others blue.
inline ImageBuffer ray_overlay(const Extraction& e) {
  ImageBuffer out = with_outline(e.filtered, e.mask);
  const Pixel c = rounded_centroid(e.mask);
  for (std::size_t k = 0; k < e.features.border.points.size(); ++k) {
    const Pixel p = e.features.border.points[k];
    const bool sharp = e.features.border.gradients[k] > kBorderGradientThreshold;
    const draw::Rgb col = sharp ? draw::Rgb{255, 0, 0} : draw::Rgb{0, 80, 255};
    draw::line(out, c.x, c.y, p.x, p.y, col);
    draw::fill_disk(out, p.x, p.y, 2.5, col);
  }
  draw::fill_disk(out, c.x, c.y, 2.5, draw::Rgb{255, 255, 0});
  return out;
}

/// Detected blobs (cyan circles), skeleton branch points (magenta) and
/// streak segments (yellow).
inline ImageBuffer structure_overlay(const Extraction& e) {
  ImageBuffer out = with_outline(e.filtered, e.mask);
  const auto& s = e.features.structures;
  for (const auto& seg : s.segments) draw::line(out, seg.a.x, seg.a.y, seg.b.x, seg.b.y, draw::Rgb{255, 230, 0});
  for (const auto& p : s.branch_points) draw::put(out, p.x, p.y, draw::Rgb{255, 0, 255});
  for (const auto& b : s.blobs) draw::circle_outline(out, b.x, b.y, b.radius(), draw::Rgb{0, 230, 255});
  return out;
}

/// Writes <stem>_mask.png, _clusters.png, _rays.png and _structures.png.
inline void write_overlays(const std::filesystem::path& dir, const std::string& stem, const Extraction& e) {
  write_mask_png(dir / (stem + "_mask.png"), e.mask);
  write_png(dir / (stem + "_clusters.png"), cluster_swatch(e.features.color));
  write_png(dir / (stem + "_rays.png"), ray_overlay(e));
  write_png(dir / (stem + "_structures.png"), structure_overlay(e));
}

}  // namespace dermabcd::app
