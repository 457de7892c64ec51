#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "dermabcd/image.hpp"

namespace dermabcd {

/// CIELAB coordinates relative to the D65 white.
struct LabPixel {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const LabPixel&, const LabPixel&) = default;
  friend auto operator<=>(const LabPixel&, const LabPixel&) = default;
};

inline double lab_distance(const LabPixel& p, const LabPixel& q) {
  const double dL = p.L - q.L, da = p.a - q.a, db = p.b - q.b;
  return std::sqrt(dL * dL + da * da + db * db);
}

inline double lab_distance_sq(const LabPixel& p, const LabPixel& q) {
  const double dL = p.L - q.L, da = p.a - q.a, db = p.b - q.b;
  return dL * dL + da * da + db * db;
}

/// Luma with 0.299/0.587/0.114 weights; single-channel input is copied as-is.
inline GrayImage to_grayscale(const ImageBuffer& img) {
  if (img.channels() == 1) return img.channel(0);
  if (img.channels() != 3) {
    throw std::invalid_argument("to_grayscale: unsupported channel count");
  }
  GrayImage out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
  }
  return out;
}

namespace detail {

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

inline constexpr double kWhiteX = 0.95047;
inline constexpr double kWhiteY = 1.0;
inline constexpr double kWhiteZ = 1.08883;
inline constexpr double kLabEpsilon = 216.0 / 24389.0;  // (6/29)^3
inline constexpr double kLabKappa = 24389.0 / 27.0;     // (29/3)^3

inline double lab_f(double t) {
  return t > kLabEpsilon ? std::cbrt(t) : (kLabKappa * t + 16.0) / 116.0;
}

inline double lab_f_inv(double f) {
  const double t = f * f * f;
  return t > kLabEpsilon ? t : (116.0 * f - 16.0) / kLabKappa;
}

// Table of sRGB companding inverses, indexed by the 8-bit code value.
inline const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[static_cast<std::size_t>(i)] = srgb_to_linear(i / 255.0);
    return t;
  }();
  return table;
}

}  // namespace detail

/// sRGB (8-bit) -> linear RGB -> XYZ (D65) -> CIELAB.
inline LabPixel rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto& lin = detail::linear_table();
  const double R = lin[r], G = lin[g], B = lin[b];
  const double X = 0.4124564 * R + 0.3575761 * G + 0.1804375 * B;
  const double Y = 0.2126729 * R + 0.7151522 * G + 0.0721750 * B;
  const double Z = 0.0193339 * R + 0.1191920 * G + 0.9503041 * B;
  const double fx = detail::lab_f(X / detail::kWhiteX);
  const double fy = detail::lab_f(Y / detail::kWhiteY);
  const double fz = detail::lab_f(Z / detail::kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// Inverse of rgb_to_lab, clamped to the 8-bit gamut. Used for swatches.
inline std::array<std::uint8_t, 3> lab_to_rgb(const LabPixel& lab) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double X = detail::lab_f_inv(fx) * detail::kWhiteX;
  const double Y = detail::lab_f_inv(fy) * detail::kWhiteY;
  const double Z = detail::lab_f_inv(fz) * detail::kWhiteZ;
  const double lin[3] = {
      3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z,
      -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z,
      0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z,
  };
  std::array<std::uint8_t, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const double c = detail::linear_to_srgb(std::clamp(lin[i], 0.0, 1.0));
    out[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(std::clamp(std::lround(c * 255.0), 0L, 255L));
  }
  return out;
}

}  // namespace dermabcd
