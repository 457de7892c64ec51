#include <gtest/gtest.h>

#include <random>

#include "dermabcd/draw.hpp"
#include "dermabcd/segmentation.hpp"
#include "dermabcd/synthetic.hpp"
#include "test_util.hpp"

using namespace dermabcd;

namespace {

// Exhaustive between-class variance scan computed straight from the pixels,
// w0 w1 (mu0 - mu1)^2, keeping the first strict maximum.
int brute_force_otsu(const GrayImage& g) {
  const auto px = g.data();
  const double n = static_cast<double>(px.size());
  int best = -1;
  long double best_val = -1.0L;
  for (int t = 0; t < 256; ++t) {
    long double n0 = 0, s0 = 0, s1 = 0;
    for (auto v : px) {
      if (v <= t) {
        n0 += 1;
        s0 += v;
      } else {
        s1 += v;
      }
    }
    const long double n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const long double d = s0 / n0 - s1 / n1;
    const long double val = (n0 / n) * (n1 / n) * d * d;
    if (val > best_val * (1.0L + 1e-15L)) {
      best_val = val;
      best = t;
    }
  }
  if (best < 0) return px[0];
  return best;
}

}  // namespace

TEST(Otsu, HalfBlackHalfWhiteReturnsZero) {
  GrayImage g(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 5; x < 10; ++x) g.at(x, y) = 255;
  EXPECT_EQ(otsu_threshold(g), 0);
}

TEST(Otsu, ConstantImageReturnsItsValue) {
  EXPECT_EQ(otsu_threshold(GrayImage(6, 6, 9)), 9);
}

TEST(Otsu, MatchesExhaustiveScan) {
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 60; ++i) {
    // Alternate full-range noise with a few sparse levels so tied candidates occur.
    GrayImage g = testutil::random_gray(64, 64, gen);
    if (i % 3 == 1) {
      for (auto& v : g.data()) v = static_cast<std::uint8_t>((v / 64) * 60 + 20);
    } else if (i % 3 == 2) {
      for (auto& v : g.data()) v = static_cast<std::uint8_t>(v < 128 ? v / 4 : 200 + v / 8);
    }
    EXPECT_EQ(otsu_threshold(g), brute_force_otsu(g)) << "image " << i;
  }
}

TEST(Morphology, EllipseElementShape) {
  // Reference 5x5 ellipse raster as produced by OpenCV's structuring element.
  const int ref[5][5] = {{0, 0, 1, 0, 0}, {1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, {0, 0, 1, 0, 0}};
  int want = 0;
  for (const auto& r : ref)
    for (int v : r) want += v;
  const auto e = ellipse_element(5);
  EXPECT_EQ(static_cast<int>(e.size()), want);
  for (const auto& p : e) {
    ASSERT_LE(std::abs(p.x), 2);
    ASSERT_LE(std::abs(p.y), 2);
    EXPECT_EQ(ref[p.y + 2][p.x + 2], 1) << p.x << "," << p.y;
  }
}

TEST(Morphology, AllBackgroundStaysEmpty) {
  BinaryMask m(20, 20);
  EXPECT_EQ(morph_clean(m).area(), 0u);
}

TEST(Morphology, InteriorHoleIsFilled) {
  BinaryMask m = testutil::rect_mask(40, 40, 10, 10, 20, 20);
  m.at(20, 20) = 0;
  EXPECT_TRUE(morph_clean(m).at(20, 20));
  EXPECT_EQ(morph_clean(m), morph_clean(testutil::rect_mask(40, 40, 10, 10, 20, 20)));
  EXPECT_EQ(fill_holes(m), testutil::rect_mask(40, 40, 10, 10, 20, 20));
}

TEST(Morphology, IsolatedPixelIsRemoved) {
  BinaryMask m(50, 50);
  m.at(25, 25) = 1;
  EXPECT_EQ(morph_clean(m).area(), 0u);
}

TEST(Morphology, BorderConnectedBackgroundIsNotAHole) {
  // A U shape open to the image border keeps its notch.
  BinaryMask m = testutil::rect_mask(30, 30, 0, 5, 20, 20);
  for (int y = 10; y < 20; ++y)
    for (int x = 0; x < 10; ++x) m.at(x, y) = 0;
  EXPECT_EQ(fill_holes(m), m);
}

TEST(LargestComponent, KeepsLargerSquare) {
  BinaryMask m(40, 40);
  for (int y = 2; y < 5; ++y)
    for (int x = 2; x < 5; ++x) m.at(x, y) = 1;
  for (int y = 20; y < 25; ++y)
    for (int x = 20; x < 25; ++x) m.at(x, y) = 1;
  const BinaryMask out = largest_component_fill(m);
  EXPECT_EQ(out.area(), 25u);
  EXPECT_TRUE(out.at(22, 22));
  EXPECT_FALSE(out.at(3, 3));
}

TEST(LargestComponent, SingleComponentUnchanged) {
  const BinaryMask m = testutil::disk_mask(40, 40, 20, 20, 9);
  EXPECT_EQ(largest_component_fill(m), m);
}

TEST(LargestComponent, TieGoesToFirstBoundingBoxInRowMajorOrder) {
  // Oracle: enumerate both components, pick the smaller (min_y, min_x).
  BinaryMask m(40, 40);
  for (int y = 20; y < 24; ++y)
    for (int x = 2; x < 6; ++x) m.at(x, y) = 1;  // box starts at (2, 20)
  for (int y = 5; y < 9; ++y)
    for (int x = 30; x < 34; ++x) m.at(x, y) = 1;  // box starts at (30, 5): earlier row
  const BinaryMask out = largest_component_fill(m);
  EXPECT_EQ(out.area(), 16u);
  EXPECT_TRUE(out.at(31, 6));
  EXPECT_FALSE(out.at(3, 21));
}

TEST(LargestComponent, DiagonalNeighboursAreConnected) {
  BinaryMask m(10, 10);
  m.at(1, 1) = m.at(2, 2) = m.at(3, 3) = 1;
  m.at(8, 1) = m.at(8, 2) = 1;
  EXPECT_EQ(largest_component_fill(m).area(), 3u);
}

TEST(LargestComponent, EmptyMaskIsSegmentationFailure) {
  EXPECT_THROW(largest_component_fill(BinaryMask(10, 10)), SegmentationError);
}

TEST(SegmentLesion, DarkDiskOnLightBackground) {
  const BinaryMask truth = testutil::disk_mask(256, 256, 128, 128, 50);
  const GrayImage g = testutil::paint(truth, 60, 200);
  const BinaryMask m = segment_lesion(g);
  EXPECT_GE(mask_iou(m, truth), 0.95);
  const auto labels = label_components(m);
  EXPECT_EQ(labels.components.size(), 1u);
  EXPECT_EQ(count_holes(m), 0u);
}

TEST(SegmentLesion, ConstantImageFails) {
  EXPECT_THROW(segment_lesion(GrayImage(64, 64, 120)), SegmentationError);
}

TEST(SegmentLesion, TooSmallImageFails) {
  EXPECT_THROW(segment_lesion(GrayImage(16, 64, 120)), SegmentationError);
}

TEST(SegmentLesion, SurvivesHairlineStrokes) {
  const BinaryMask truth = testutil::disk_mask(256, 256, 128, 128, 50);
  ImageBuffer img = testutil::to_rgb(testutil::paint(truth, 60, 200));
  Rng rng(77);
  synthetic::add_hairs(img, 20, rng);
  const BinaryMask m = segment_lesion(to_grayscale(img));
  EXPECT_GE(mask_iou(m, truth), 0.90);
}

TEST(SegmentLesion, SingleComponentWithoutHolesOnNoisyLesions) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto f = synthetic::make_fixture(seed % 2 ? synthetic::FixtureKind::HairyIrregular
                                                    : synthetic::FixtureKind::HairyDisk,
                                           seed);
    const BinaryMask m = segment_lesion(to_grayscale(f.image));
    EXPECT_EQ(label_components(m).components.size(), 1u);
    EXPECT_EQ(count_holes(m), 0u);
  }
}

TEST(SegmentLesion, TranslationShiftsTheMask) {
  const BinaryMask truth = testutil::disk_mask(200, 200, 90, 95, 40);
  const GrayImage g = testutil::paint(truth, 70, 190);
  const BinaryMask truth2 = testutil::disk_mask(200, 200, 97, 90, 40);
  const GrayImage g2 = testutil::paint(truth2, 70, 190);
  const BinaryMask a = segment_lesion(g), b = segment_lesion(g2);
  for (int y = 10; y < 190; ++y)
    for (int x = 10; x < 190; ++x) EXPECT_EQ(a.at(x, y), b.at(x + 7, y - 5));
}

TEST(SegmentLesion, InvertedPolarityDoesNotReturnTheBackground) {
  // Light lesion on dark skin: the lesion-darker assumption is violated. The
  // result must be a failure, never a mask that is the skin around the lesion.
  const BinaryMask truth = testutil::disk_mask(128, 128, 64, 64, 30);
  const GrayImage g = testutil::paint(truth, 200, 60);
  try {
    const BinaryMask m = segment_lesion(g);
    ADD_FAILURE() << "expected failure, got mask of area " << m.area();
  } catch (const SegmentationError&) {
  }
}

TEST(MaskIou, Basics) {
  const BinaryMask a = testutil::rect_mask(10, 10, 0, 0, 4, 4);
  const BinaryMask b = testutil::rect_mask(10, 10, 2, 0, 4, 4);
  EXPECT_DOUBLE_EQ(mask_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(mask_iou(a, b), 8.0 / 24.0);
}
