#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dermabcd/color.hpp"
#include "dermabcd/filter.hpp"
#include "dermabcd/image.hpp"
#include "test_util.hpp"

using namespace dermabcd;

TEST(ImageBuffer, RejectsBadShapes) {
  EXPECT_THROW(ImageBuffer(0, 4, 3), std::invalid_argument);
  EXPECT_THROW(ImageBuffer(4, 4, 2), std::invalid_argument);
  EXPECT_THROW(ImageBuffer(2, 2, 3, std::vector<std::uint8_t>(11)), std::invalid_argument);
  ImageBuffer ok(3, 2, 3, std::vector<std::uint8_t>(18, 4));
  EXPECT_EQ(ok.at(2, 1, 2), 4);
}

TEST(Grayscale, Examples) {
  ImageBuffer img(3, 1, 3);
  const std::uint8_t px[3][3] = {{255, 255, 255}, {0, 0, 0}, {255, 0, 0}};
  for (int x = 0; x < 3; ++x)
    for (int c = 0; c < 3; ++c) img.at(x, 0, c) = px[x][c];
  const GrayImage g = to_grayscale(img);
  EXPECT_EQ(g.at(0, 0), 255);
  EXPECT_EQ(g.at(1, 0), 0);
  EXPECT_EQ(g.at(2, 0), 76);
}

TEST(Grayscale, MatchesLumaFormulaOnAllPrimariesAndRandomPixels) {
  std::mt19937 gen(3);
  std::uniform_int_distribution<int> d(0, 255);
  ImageBuffer img(64, 64, 3);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(gen));
  const GrayImage g = to_grayscale(img);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const double l = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      EXPECT_EQ(g.at(x, y), static_cast<int>(std::lround(l)));
    }
}

TEST(Grayscale, SingleChannelPassesThroughAndIsIdempotent) {
  std::mt19937_64 gen(1);
  const GrayImage src = testutil::random_gray(9, 7, gen);
  const ImageBuffer one = ImageBuffer::from_gray(src);
  const GrayImage g = to_grayscale(one);
  EXPECT_EQ(g, src);
  EXPECT_EQ(to_grayscale(ImageBuffer::from_gray(g)), g);
}

TEST(Filter, GaussianKernelCentreWeight) {
  // Independent evaluation of exp(-(dx^2+dy^2)/2) on the 3x3 offsets.
  double sum = 0.0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) sum += std::exp(-(dx * dx + dy * dy) / 2.0);
  const double centre = 1.0 / sum;
  const auto k = stream_kernel(FilterKind::Gaussian3Sigma1);
  EXPECT_NEAR(k[4], centre, 1e-12);
  EXPECT_NEAR(k[4], 0.2042, 1e-4);
  EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-12);
  const auto f = stream_kernel(FilterKind::FlatAverage3);
  EXPECT_NEAR(std::accumulate(f.begin(), f.end(), 0.0), 1.0, 1e-12);
  for (double v : f) EXPECT_DOUBLE_EQ(v, 1.0 / 9.0);
}

TEST(Filter, ConstantImageIsPreservedExactly) {
  for (auto kind : {FilterKind::FlatAverage3, FilterKind::Gaussian3Sigma1, FilterKind::Median3}) {
    GrayImage g(11, 6, 7);
    EXPECT_EQ(apply_filter(g, kind), g) << stream_name(kind);
    ImageBuffer rgb(5, 5, 3, 200);
    EXPECT_EQ(apply_filter(rgb, kind), rgb) << stream_name(kind);
  }
}

TEST(Filter, MedianOfOneToNine) {
  GrayImage g(3, 3, std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  EXPECT_EQ(apply_filter(g, FilterKind::Median3).at(1, 1), 5);
}

namespace {

// Reference 3x3 neighbourhood with edge replication.
std::array<int, 9> neighbourhood(const GrayImage& g, int x, int y) {
  std::array<int, 9> v{};
  int i = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const int xx = std::clamp(x + dx, 0, g.width() - 1), yy = std::clamp(y + dy, 0, g.height() - 1);
      v[static_cast<std::size_t>(i++)] = g.at(xx, yy);
    }
  return v;
}

}  // namespace

TEST(Filter, MatchesDirectNeighbourhoodEvaluation) {
  std::mt19937_64 gen(9);
  const GrayImage g = testutil::random_gray(17, 13, gen);
  const GrayImage med = apply_filter(g, FilterKind::Median3);
  const GrayImage flat = apply_filter(g, FilterKind::FlatAverage3);
  const GrayImage gau = apply_filter(g, FilterKind::Gaussian3Sigma1);
  const auto gk = stream_kernel(FilterKind::Gaussian3Sigma1);
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) {
      auto n = neighbourhood(g, x, y);
      double mean = 0.0, gs = 0.0;
      for (std::size_t i = 0; i < 9; ++i) {
        mean += n[i] / 9.0;
        gs += n[i] * gk[i];
      }
      EXPECT_NEAR(flat.at(x, y), mean, 0.5 + 1e-9);
      EXPECT_NEAR(gau.at(x, y), gs, 0.5 + 1e-9);
      // Median output is a member of the neighbourhood and is its 5th order statistic.
      std::sort(n.begin(), n.end());
      EXPECT_EQ(med.at(x, y), n[4]);
    }
}

TEST(Filter, MultiChannelIsPerChannel) {
  std::mt19937_64 gen(5);
  const GrayImage r = testutil::random_gray(8, 8, gen), g = testutil::random_gray(8, 8, gen),
                  b = testutil::random_gray(8, 8, gen);
  ImageBuffer img(8, 8, 3);
  img.set_channel(0, r);
  img.set_channel(1, g);
  img.set_channel(2, b);
  for (auto kind : {FilterKind::FlatAverage3, FilterKind::Gaussian3Sigma1, FilterKind::Median3}) {
    const ImageBuffer out = apply_filter(img, kind);
    EXPECT_EQ(out.channel(0), apply_filter(r, kind));
    EXPECT_EQ(out.channel(1), apply_filter(g, kind));
    EXPECT_EQ(out.channel(2), apply_filter(b, kind));
  }
}

TEST(Filter, StreamNamesRoundTrip) {
  for (auto kind : {FilterKind::FlatAverage3, FilterKind::Gaussian3Sigma1, FilterKind::Median3}) {
    EXPECT_EQ(parse_stream(stream_name(kind)), kind);
  }
  EXPECT_FALSE(parse_stream("bilateral").has_value());
}

namespace {

// Hand-coded sRGB -> XYZ (D65) -> CIELAB, straight from the published formulas.
LabPixel reference_lab(double r8, double g8, double b8) {
  auto lin = [](double c) {
    c /= 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double r = lin(r8), g = lin(g8), b = lin(b8);
  const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  auto f = [](double t) {
    const double e = 216.0 / 24389.0, k = 24389.0 / 27.0;
    return t > e ? std::cbrt(t) : (k * t + 16.0) / 116.0;
  };
  const double fx = f(X / 0.95047), fy = f(Y / 1.0), fz = f(Z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace

TEST(Lab, Examples) {
  const LabPixel white = rgb_to_lab(255, 255, 255);
  EXPECT_NEAR(white.L, 100.0, 0.5);
  EXPECT_NEAR(white.a, 0.0, 0.5);
  EXPECT_NEAR(white.b, 0.0, 0.5);
  const LabPixel black = rgb_to_lab(0, 0, 0);
  EXPECT_NEAR(black.L, 0.0, 1e-9);
  EXPECT_NEAR(black.a, 0.0, 1e-9);
  EXPECT_NEAR(black.b, 0.0, 1e-9);
  const LabPixel red = rgb_to_lab(255, 0, 0);
  EXPECT_NEAR(red.L, 53.2, 1.0);
  EXPECT_NEAR(red.a, 80.1, 1.0);
  EXPECT_NEAR(red.b, 67.2, 1.0);
}

TEST(Lab, AgreesWithReferenceFormulas) {
  std::mt19937 gen(17);
  std::uniform_int_distribution<int> d(0, 255);
  for (int i = 0; i < 2000; ++i) {
    const int r = d(gen), g = d(gen), b = d(gen);
    const LabPixel got = rgb_to_lab(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b));
    const LabPixel want = reference_lab(r, g, b);
    EXPECT_NEAR(got.L, want.L, 0.05);
    EXPECT_NEAR(got.a, want.a, 0.05);
    EXPECT_NEAR(got.b, want.b, 0.05);
  }
}

TEST(Lab, LightnessStrictlyIncreasesAlongGrayAxis) {
  double prev = -1.0;
  for (int v = 0; v < 256; ++v) {
    const auto u = static_cast<std::uint8_t>(v);
    const LabPixel p = rgb_to_lab(u, u, u);
    EXPECT_GT(p.L, prev);
    EXPECT_GE(p.L, 0.0);
    EXPECT_LE(p.L, 100.0 + 1e-3);
    prev = p.L;
  }
}

TEST(Lab, InverseRecoversEightBitColours) {
  std::mt19937 gen(23);
  std::uniform_int_distribution<int> d(0, 255);
  for (int i = 0; i < 500; ++i) {
    const std::array<std::uint8_t, 3> c = {static_cast<std::uint8_t>(d(gen)), static_cast<std::uint8_t>(d(gen)),
                                           static_cast<std::uint8_t>(d(gen))};
    EXPECT_EQ(lab_to_rgb(rgb_to_lab(c[0], c[1], c[2])), c);
  }
}
