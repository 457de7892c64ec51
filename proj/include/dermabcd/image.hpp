#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dermabcd {

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Single-channel raster stored row-major.
template <typename T>
class Plane {
 public:
  using value_type = T;

  Plane() = default;

  Plane(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("raster dimensions must be positive, got " +
                                  std::to_string(width) + "x" + std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Plane(int width, int height, std::vector<T> data) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("raster dimensions must be positive");
    }
    if (data.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw std::invalid_argument("raster data length does not match dimensions");
    }
    data_ = std::move(data);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }

  // Edge-replicated read.
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return data_[index(x, y)];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  std::span<T> row(int y) { return std::span<T>(data_).subspan(index(0, y), width_); }
  std::span<const T> row(int y) const {
    return std::span<const T>(data_).subspan(index(0, y), width_);
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Plane<std::uint8_t>;
using FloatPlane = Plane<double>;

/// Per-pixel lesion membership, 1 = lesion, 0 = background.
class BinaryMask : public Plane<std::uint8_t> {
 public:
  using Plane<std::uint8_t>::Plane;

  bool test(int x, int y) const { return contains(x, y) && at(x, y) != 0; }

  std::size_t area() const noexcept {
    std::size_t n = 0;
    for (auto v : data()) n += v != 0;
    return n;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Interleaved 8-bit raster with 1 or 3 channels. Three-channel data is R, G, B.
class ImageBuffer {
 public:
  ImageBuffer() = default;

  ImageBuffer(int width, int height, int channels, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    validate_shape();
    data_.assign(expected_size(), fill);
  }

  ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != expected_size()) {
      throw std::invalid_argument("image data length does not match width*height*channels");
    }
  }

  static ImageBuffer from_gray(const GrayImage& gray) {
    auto src = gray.data();
    return ImageBuffer(gray.width(), gray.height(), 1,
                       std::vector<std::uint8_t>(src.begin(), src.end()));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  GrayImage channel(int c) const {
    GrayImage out(width_, height_);
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = data_[i * static_cast<std::size_t>(channels_) + static_cast<std::size_t>(c)];
    }
    return out;
  }

  void set_channel(int c, const GrayImage& plane) {
    auto src = plane.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      data_[i * static_cast<std::size_t>(channels_) + static_cast<std::size_t>(c)] = src[i];
    }
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  void validate_shape() const {
    if (width_ < 1 || height_ < 1) {
      throw std::invalid_argument("image dimensions must be positive");
    }
    if (channels_ != 1 && channels_ != 3) {
      throw std::invalid_argument("unsupported channel count " + std::to_string(channels_));
    }
  }

  std::size_t expected_size() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) *
           static_cast<std::size_t>(channels_);
  }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace dermabcd
