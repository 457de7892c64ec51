#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dermabcd/distance.hpp"
#include "dermabcd/draw.hpp"
#include "dermabcd/geometry.hpp"
#include "dermabcd/image.hpp"
#include "dermabcd/random.hpp"
#include "dermabcd/scoring.hpp"

// Synthetic dermoscopy-like lesions with known ground truth. Lesions are
// darker than the surrounding skin; malignant fixtures are built to be
// asymmetric about both axes, multi-coloured and dotted so that the TDS rule
// lands far from its decision thresholds.
namespace dermabcd::synthetic {

enum class FixtureKind { Disk, HairyDisk, SoftDisk, HalfDisk, Irregular, HairyIrregular };

inline std::string_view kind_name(FixtureKind k) {
  switch (k) {
    case FixtureKind::Disk: return "disk";
    case FixtureKind::HairyDisk: return "hairy_disk";
    case FixtureKind::SoftDisk: return "soft_disk";
    case FixtureKind::HalfDisk: return "half_disk";
    case FixtureKind::Irregular: return "irregular";
    case FixtureKind::HairyIrregular: return "hairy_irregular";
  }
  return "unknown";
}

struct Fixture {
  std::string id;
  FixtureKind kind = FixtureKind::Disk;
  BinaryLabel label = BinaryLabel::Benign;
  std::string dx;
  std::uint64_t seed = 0;
  ImageBuffer image;
  BinaryMask truth;
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.0;  // nominal radius
  int expected_a_min = 0;
  int expected_a_max = 2;
  int colors = 1;  // distinct lesion colours painted
  int dots = 0;
  int hairs = 0;
};

inline constexpr int kFixtureSize = 256;

inline const std::array<draw::Rgb, 4>& lesion_palette() {
  static const std::array<draw::Rgb, 4> p = {{
      {122, 74, 50},   // mid brown
      {58, 38, 34},    // dark brown
      {92, 104, 140},  // blue-grey
      {156, 66, 66},   // red-brown
  }};
  return p;
}

inline draw::Rgb skin_color(Rng& rng) {
  return {static_cast<std::uint8_t>(rng.between(214, 230)), static_cast<std::uint8_t>(rng.between(180, 192)),
          static_cast<std::uint8_t>(rng.between(154, 166))};
}

/// Adds independent uniform noise in [-amp, amp] to every sample.
inline void add_noise(ImageBuffer& img, int amp, Rng& rng) {
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(std::clamp(int(v) + rng.between(-amp, amp), 0, 255));
}

/// Thin bright strokes crossing the whole frame, alternating between
/// roughly vertical and roughly horizontal.
inline void add_hairs(ImageBuffer& img, int count, Rng& rng) {
  const int w = img.width(), h = img.height();
  for (int i = 0; i < count; ++i) {
    const draw::Rgb c = {static_cast<std::uint8_t>(rng.between(236, 250)), static_cast<std::uint8_t>(rng.between(228, 242)),
                         static_cast<std::uint8_t>(rng.between(220, 236))};
    if (i % 2 == 0) {
      draw::line(img, rng.between(0, w - 1), 0, rng.between(0, w - 1), h - 1, c, 1);
    } else {
      draw::line(img, 0, rng.between(0, h - 1), w - 1, rng.between(0, h - 1), c, 1);
    }
  }
}

inline void paint_mask(ImageBuffer& img, const BinaryMask& mask, const draw::Rgb& c) {
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) draw::put(img, x, y, c);
}

inline Fixture make_disk(std::uint64_t seed, bool hairy) {
  Rng rng(seed);
  Fixture f;
  f.kind = hairy ? FixtureKind::HairyDisk : FixtureKind::Disk;
  f.label = BinaryLabel::Benign;
  f.dx = "nv";
  f.seed = seed;
  f.radius = rng.between(36, 70);
  f.center_x = kFixtureSize / 2.0 + rng.between(-16, 16);
  f.center_y = kFixtureSize / 2.0 + rng.between(-16, 16);
  f.image = ImageBuffer(kFixtureSize, kFixtureSize, 3);
  draw::fill(f.image, skin_color(rng));
  f.truth = BinaryMask(kFixtureSize, kFixtureSize);
  draw::fill_disk(f.truth, f.center_x, f.center_y, f.radius, std::uint8_t{1});
  const auto& pal = lesion_palette();
  paint_mask(f.image, f.truth, pal[rng.below(2)]);
  if (hairy) {
    f.hairs = 20;
    add_hairs(f.image, f.hairs, rng);
  }
  add_noise(f.image, 3, rng);
  f.expected_a_min = f.expected_a_max = 0;
  return f;
}

/// Disk whose colour fades linearly into the skin over a wide ramp, so the
/// border has no sharp edge. Ground truth is the ramp midline.
inline Fixture make_soft_disk(std::uint64_t seed) {
  Rng rng(seed);
  Fixture f;
  f.kind = FixtureKind::SoftDisk;
  f.label = BinaryLabel::Benign;
  f.dx = "nv";
  f.seed = seed;
  const double core = rng.uniform(35.0, 50.0), ramp = rng.uniform(26.0, 32.0);
  f.radius = core + ramp / 2;
  f.center_x = kFixtureSize / 2.0 + rng.between(-6, 6);
  f.center_y = kFixtureSize / 2.0 + rng.between(-6, 6);
  const draw::Rgb skin = skin_color(rng);
  const draw::Rgb lesion = {170, 128, 100};  // light tan
  f.image = ImageBuffer(kFixtureSize, kFixtureSize, 3);
  f.truth = BinaryMask(kFixtureSize, kFixtureSize);
  for (int y = 0; y < kFixtureSize; ++y)
    for (int x = 0; x < kFixtureSize; ++x) {
      const double r = std::hypot(x - f.center_x, y - f.center_y);
      const double t = std::clamp((r - core) / ramp, 0.0, 1.0);
      draw::Rgb c;
      for (std::size_t ch = 0; ch < 3; ++ch)
        c[ch] = static_cast<std::uint8_t>(std::lround(lesion[ch] + t * (skin[ch] - lesion[ch])));
      draw::put(f.image, x, y, c);
      f.truth.at(x, y) = r <= f.radius ? 1 : 0;
    }
  add_noise(f.image, 3, rng);
  f.expected_a_min = f.expected_a_max = 0;
  return f;
}

inline Fixture make_half_disk(std::uint64_t seed) {
  Rng rng(seed);
  Fixture f;
  f.kind = FixtureKind::HalfDisk;
  f.label = BinaryLabel::Benign;
  f.dx = "bkl";
  f.seed = seed;
  f.radius = rng.between(55, 75);
  f.center_x = kFixtureSize / 2.0 + rng.between(-10, 10);
  f.center_y = kFixtureSize / 2.0 + rng.between(-10, 10);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double nx = std::cos(phi), ny = std::sin(phi);
  // Shift the disk so the half's centroid sits near the frame centre.
  const double off = 4.0 * f.radius / (3.0 * std::numbers::pi);
  const double cx = f.center_x - off * nx, cy = f.center_y - off * ny;
  f.image = ImageBuffer(kFixtureSize, kFixtureSize, 3);
  draw::fill(f.image, skin_color(rng));
  f.truth = BinaryMask(kFixtureSize, kFixtureSize);
  for (int y = 0; y < kFixtureSize; ++y)
    for (int x = 0; x < kFixtureSize; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= f.radius * f.radius && dx * nx + dy * ny >= 0.0) f.truth.at(x, y) = 1;
    }
  paint_mask(f.image, f.truth, lesion_palette()[rng.below(2)]);
  add_noise(f.image, 3, rng);
  f.expected_a_min = 1;
  f.expected_a_max = 2;
  return f;
}

/// Star-shaped outline r(t) = R (1 + sum_k amp_k cos(k t - phase_k)).
/// Scalene triangle with rounded corners: every pixel inside the triangle or
/// within `rounding` of one of its edges.
inline BinaryMask rounded_triangle(const std::array<std::array<double, 2>, 3>& v, double rounding) {
  const auto seg_dist = [](double px, double py, const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const double vx = b[0] - a[0], vy = b[1] - a[1];
    const double t = std::clamp(((px - a[0]) * vx + (py - a[1]) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
    return std::hypot(px - a[0] - t * vx, py - a[1] - t * vy);
  };
  const auto side = [](double px, double py, const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
  };
  BinaryMask m(kFixtureSize, kFixtureSize);
  for (int y = 0; y < kFixtureSize; ++y)
    for (int x = 0; x < kFixtureSize; ++x) {
      const double s1 = side(x, y, v[0], v[1]), s2 = side(x, y, v[1], v[2]), s3 = side(x, y, v[2], v[0]);
      const bool inside = (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
      const double d = std::min({seg_dist(x, y, v[0], v[1]), seg_dist(x, y, v[1], v[2]), seg_dist(x, y, v[2], v[0])});
      if (inside || d <= rounding) m.at(x, y) = 1;
    }
  return m;
}

inline Fixture make_irregular(std::uint64_t seed, bool hairy) {
  Rng rng(seed);
  Fixture f;
  f.kind = hairy ? FixtureKind::HairyIrregular : FixtureKind::Irregular;
  f.label = BinaryLabel::Malignant;
  f.dx = "mel";
  f.seed = seed;
  f.image = ImageBuffer(kFixtureSize, kFixtureSize, 3);
  draw::fill(f.image, skin_color(rng));

  // Redraw the outline until it is clearly asymmetric about both principal
  // axes and its centroid lies inside it.
  for (int attempt = 0;; ++attempt) {
    const double legs[2] = {rng.uniform(110.0, 130.0), rng.uniform(70.0, 85.0)};
    const double skew = rng.uniform(-0.15, 0.15), rot = rng.uniform(0.0, 2 * std::numbers::pi);
    const std::array<std::array<double, 2>, 3> local = {{{0.0, 0.0}, {legs[0], 0.0}, {skew * legs[0], legs[1]}}};
    f.center_x = kFixtureSize / 2.0 + rng.between(-6, 6);
    f.center_y = kFixtureSize / 2.0 + rng.between(-6, 6);
    const double gx = (local[1][0] + local[2][0]) / 3, gy = (local[1][1] + local[2][1]) / 3;
    std::array<std::array<double, 2>, 3> v{};
    for (std::size_t k = 0; k < 3; ++k) {
      const double x = local[k][0] - gx, y = local[k][1] - gy;
      v[k] = {f.center_x + x * std::cos(rot) - y * std::sin(rot), f.center_y + x * std::sin(rot) + y * std::cos(rot)};
    }
    f.truth = rounded_triangle(v, rng.uniform(10.0, 16.0));
    f.radius = std::sqrt(static_cast<double>(f.truth.area()) / std::numbers::pi);
    const auto asym = axis_asymmetry(f.truth);
    const Pixel c = rounded_centroid(f.truth);
    if (asym.d_major > 0.22 && asym.d_minor > 0.22 && f.truth.test(c.x, c.y)) break;
    if (attempt >= 1000) throw std::logic_error("could not draw an asymmetric outline");
  }

  // Four angular colour sectors about the centroid.
  const Centroid c = mask_centroid(f.truth);
  const double start = rng.uniform(0.0, 2 * std::numbers::pi);
  const auto& pal = lesion_palette();
  for (int y = 0; y < kFixtureSize; ++y)
    for (int x = 0; x < kFixtureSize; ++x) {
      if (!f.truth.at(x, y)) continue;
      double t = std::atan2(y - c.y, x - c.x) - start;
      while (t < 0) t += 2 * std::numbers::pi;
      const auto sector = static_cast<std::size_t>(std::min(3.0, std::floor(t / (std::numbers::pi / 2))));
      draw::put(f.image, x, y, pal[sector]);
    }
  f.colors = 4;

  // Dark globules well inside the lesion, mutually separated.
  const FloatPlane d2 = [&] {
    BinaryMask bg(kFixtureSize, kFixtureSize);
    for (int y = 0; y < kFixtureSize; ++y)
      for (int x = 0; x < kFixtureSize; ++x) bg.at(x, y) = f.truth.at(x, y) ? 0 : 1;
    return squared_distance_to(bg);
  }();
  std::vector<Pixel> dots;
  for (int tries = 0; tries < 5000 && dots.size() < 5; ++tries) {
    const Pixel p{rng.between(0, kFixtureSize - 1), rng.between(0, kFixtureSize - 1)};
    if (d2.at(p.x, p.y) < 16.0 * 16.0) continue;
    bool far = true;
    for (const auto& q : dots) far = far && std::hypot(p.x - q.x, p.y - q.y) >= 16.0;
    if (far) dots.push_back(p);
  }
  for (const auto& p : dots) draw::fill_disk(f.image, p.x, p.y, 4.0, draw::Rgb{24, 14, 14});
  f.dots = static_cast<int>(dots.size());

  if (hairy) {
    f.hairs = 20;
    add_hairs(f.image, f.hairs, rng);
  }
  add_noise(f.image, 3, rng);
  f.expected_a_min = f.expected_a_max = 2;
  return f;
}

inline Fixture make_fixture(FixtureKind kind, std::uint64_t seed) {
  switch (kind) {
    case FixtureKind::Disk: return make_disk(seed, false);
    case FixtureKind::HairyDisk: return make_disk(seed, true);
    case FixtureKind::SoftDisk: return make_soft_disk(seed);
    case FixtureKind::HalfDisk: return make_half_disk(seed);
    case FixtureKind::Irregular: return make_irregular(seed, false);
    case FixtureKind::HairyIrregular: return make_irregular(seed, true);
  }
  return make_disk(seed, false);
}

struct CorpusOptions {
  int disks = 6;
  int hairy_disks = 6;
  int soft_disks = 6;
  int half_disks = 6;
  int irregular = 16;
  int hairy_irregular = 8;
};

/// Balanced corpus (24 benign, 24 malignant by default) with ids fx000, fx001, ...
inline std::vector<Fixture> make_corpus(std::uint64_t seed, const CorpusOptions& opts = {}) {
  std::vector<Fixture> out;
  Rng seeds(seed);
  auto add = [&](FixtureKind kind, int n) {
    for (int i = 0; i < n; ++i) {
      Fixture f = make_fixture(kind, seeds.next());
      char id[16];
      std::snprintf(id, sizeof id, "fx%03zu", out.size());
      f.id = id;
      out.push_back(std::move(f));
    }
  };
  add(FixtureKind::Disk, opts.disks);
  add(FixtureKind::HairyDisk, opts.hairy_disks);
  add(FixtureKind::SoftDisk, opts.soft_disks);
  add(FixtureKind::HalfDisk, opts.half_disks);
  add(FixtureKind::Irregular, opts.irregular);
  add(FixtureKind::HairyIrregular, opts.hairy_irregular);
  return out;
}

}  // namespace dermabcd::synthetic
