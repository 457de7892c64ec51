#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "dermabcd/error.hpp"
#include "dermabcd/image.hpp"

namespace dermabcd::app {

/// Decodes a PNG or JPEG into interleaved 8-bit RGB.
inline ImageBuffer read_rgb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw IoError("image file is empty: " + path.string());
  cv::Mat bgr;
  try {
    bgr = cv::imdecode(bytes, cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    bgr.release();
  }
  if (bgr.empty() || bgr.type() != CV_8UC3) throw IoError("cannot decode image " + path.string());
  ImageBuffer img(bgr.cols, bgr.rows, 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(x, y, 0) = row[x][2];
      img.at(x, y, 1) = row[x][1];
      img.at(x, y, 2) = row[x][0];
    }
  }
  return img;
}

/// Decodes an 8-bit single-channel image (masks).
inline GrayImage read_gray(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  cv::Mat g;
  if (!bytes.empty()) g = cv::imdecode(bytes, cv::IMREAD_GRAYSCALE);
  if (g.empty()) throw IoError("cannot decode image " + path.string());
  GrayImage out(g.cols, g.rows);
  for (int y = 0; y < g.rows; ++y) std::memcpy(out.row(y).data(), g.ptr<std::uint8_t>(y), static_cast<std::size_t>(g.cols));
  return out;
}

namespace detail {

inline void write_encoded(const std::filesystem::path& path, const cv::Mat& mat) {
  std::vector<unsigned char> bytes;
  if (!cv::imencode(".png", mat, bytes)) throw IoError("cannot encode " + path.string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  if (img.channels() == 1) {
    cv::Mat m(img.height(), img.width(), CV_8UC1);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) m.at<std::uint8_t>(y, x) = img.at(x, y, 0);
    detail::write_encoded(path, m);
    return;
  }
  cv::Mat m(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) m.at<cv::Vec3b>(y, x) = {img.at(x, y, 2), img.at(x, y, 1), img.at(x, y, 0)};
  detail::write_encoded(path, m);
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) std::memcpy(m.ptr<std::uint8_t>(y), img.row(y).data(), static_cast<std::size_t>(img.width()));
  detail::write_encoded(path, m);
}

/// Foreground 255, background 0.
inline void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  GrayImage g(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) g.at(x, y) = mask.at(x, y) ? 255 : 0;
  write_png(path, g);
}

inline BinaryMask read_mask_png(const std::filesystem::path& path) {
  const GrayImage g = read_gray(path);
  BinaryMask m(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) m.at(x, y) = g.at(x, y) >= 128 ? 1 : 0;
  return m;
}

}  // namespace dermabcd::app
