#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dermabcd/image.hpp"

namespace dermabcd {

/// The three 3x3 noise-removal preprocessing streams.
enum class FilterKind { FlatAverage3, Gaussian3Sigma1, Median3 };

inline std::string_view stream_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::FlatAverage3: return "flat";
    case FilterKind::Gaussian3Sigma1: return "gaussian";
    case FilterKind::Median3: return "median";
  }
  return "unknown";
}

inline std::optional<FilterKind> parse_stream(std::string_view name) {
  if (name == "flat") return FilterKind::FlatAverage3;
  if (name == "gaussian") return FilterKind::Gaussian3Sigma1;
  if (name == "median") return FilterKind::Median3;
  return std::nullopt;
}

/// Sampled, unit-sum 1-D Gaussian with the given radius.
inline std::vector<double> gaussian_kernel_1d(double sigma, int radius) {
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// 3x3 kernel of the named linear stream, row-major. Median3 has no kernel.
inline std::array<double, 9> stream_kernel(FilterKind kind) {
  std::array<double, 9> k{};
  if (kind == FilterKind::FlatAverage3) {
    k.fill(1.0 / 9.0);
  } else if (kind == FilterKind::Gaussian3Sigma1) {
    double sum = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const double v = std::exp(-(dx * dx + dy * dy) / 2.0);
        k[static_cast<std::size_t>((dy + 1) * 3 + dx + 1)] = v;
        sum += v;
      }
    }
    for (auto& v : k) v /= sum;
  } else {
    throw std::invalid_argument("median filter has no linear kernel");
  }
  return k;
}

inline GrayImage apply_filter(const GrayImage& img, FilterKind kind) {
  if (img.empty()) throw std::invalid_argument("apply_filter: empty image");
  GrayImage out(img.width(), img.height());
  if (kind == FilterKind::Median3) {
    std::array<std::uint8_t, 9> window{};
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        std::size_t n = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) window[n++] = img.clamped(x + dx, y + dy);
        std::nth_element(window.begin(), window.begin() + 4, window.end());
        out.at(x, y) = window[4];
      }
    }
    return out;
  }
  const auto k = stream_kernel(kind);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      std::size_t n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) acc += k[n++] * img.clamped(x + dx, y + dy);
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
  }
  return out;
}

inline ImageBuffer apply_filter(const ImageBuffer& img, FilterKind kind) {
  if (img.empty()) throw std::invalid_argument("apply_filter: empty image");
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int c = 0; c < img.channels(); ++c) out.set_channel(c, apply_filter(img.channel(c), kind));
  return out;
}

inline FloatPlane to_float(const GrayImage& img, double scale = 1.0) {
  FloatPlane out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale;
  return out;
}

/// Separable convolution with edge replication, same kernel along both axes.
inline FloatPlane convolve_separable(const FloatPlane& img, const std::vector<double>& kernel) {
  const int r = static_cast<int>(kernel.size() / 2);
  FloatPlane tmp(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += kernel[static_cast<std::size_t>(i + r)] * img.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  }
  FloatPlane out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += kernel[static_cast<std::size_t>(i + r)] * tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

inline FloatPlane gaussian_blur(const FloatPlane& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  return convolve_separable(img, gaussian_kernel_1d(sigma, radius));
}

/// Mean over a (2r+1)x(2r+1) window with edge replication.
inline FloatPlane box_mean(const FloatPlane& img, int radius) {
  const std::vector<double> k(static_cast<std::size_t>(2 * radius + 1), 1.0 / (2 * radius + 1));
  return convolve_separable(img, k);
}

}  // namespace dermabcd
