#pragma once

#include <cstdint>

#include "dermabcd/color.hpp"
#include "dermabcd/color_features.hpp"
#include "dermabcd/filter.hpp"
#include "dermabcd/geometry.hpp"
#include "dermabcd/image.hpp"
#include "dermabcd/scoring.hpp"
#include "dermabcd/segmentation.hpp"
#include "dermabcd/structures.hpp"

namespace dermabcd {

struct PipelineConfig {
  FilterKind stream = FilterKind::Median3;
  std::uint64_t seed = 0;
  int border_patch_samples = kBorderPatchSamples;
  ColorOptions color;
  StructureOptions structures;
};

struct Extraction {
  ImageBuffer filtered;  // the preprocessing stream output
  GrayImage gray;
  BinaryMask mask;
  AbcdFeatures features;
  TdsAssessment assessment;
};

/// Preprocess, segment, measure A, B, C and D, and score one image.
inline Extraction extract_features(const ImageBuffer& image, const PipelineConfig& config) {
  Extraction e;
  e.filtered = apply_filter(image, config.stream);
  e.gray = to_grayscale(e.filtered);
  e.mask = segment_lesion(e.gray);

  AbcdFeatures& f = e.features;
  f.asymmetry = axis_asymmetry(e.mask);
  f.border = border_irregularity(e.gray, e.mask, config.border_patch_samples);
  f.color = color_score(e.filtered, e.mask, config.seed, config.color);
  f.structures = detect_structures(e.gray, e.mask, config.structures, config.seed);
  f.a = f.asymmetry.a_score;
  f.b = f.border.b_score;
  f.c = f.color.c_score;
  f.d = f.structures.d_score;
  e.assessment = assess(f);
  return e;
}

}  // namespace dermabcd
