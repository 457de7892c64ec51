#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dermabcd/color_features.hpp"
#include "dermabcd/geometry.hpp"
#include "dermabcd/structures.hpp"

namespace dermabcd {

enum class TdsCategory { Benign, Suspicious, Malignant };
enum class BinaryLabel { Benign = 0, Malignant = 1 };

inline std::string_view category_name(TdsCategory c) {
  switch (c) {
    case TdsCategory::Benign: return "Benign";
    case TdsCategory::Suspicious: return "Suspicious";
    case TdsCategory::Malignant: return "Malignant";
  }
  return "Unknown";
}

inline std::string_view label_name(BinaryLabel l) {
  return l == BinaryLabel::Malignant ? "malignant" : "benign";
}

inline std::optional<BinaryLabel> parse_label(std::string_view s) {
  if (s == "benign") return BinaryLabel::Benign;
  if (s == "malignant") return BinaryLabel::Malignant;
  return std::nullopt;
}

inline std::optional<TdsCategory> parse_category(std::string_view s) {
  if (s == "Benign") return TdsCategory::Benign;
  if (s == "Suspicious") return TdsCategory::Suspicious;
  if (s == "Malignant") return TdsCategory::Malignant;
  return std::nullopt;
}

/// The four ABCD scores plus the measurements that produced them.
struct AbcdFeatures {
  int a = 0;
  int b = 0;
  int c = 1;
  int d = 0;

  AsymmetryResult asymmetry;
  BorderResult border;
  ColorResult color;
  StructuresResult structures;
};

struct TdsAssessment {
  double tds = 0.0;
  TdsCategory category = TdsCategory::Benign;
};

inline constexpr double kBenignUpper = 4.75;     // TDS below this is benign
inline constexpr double kMalignantLower = 5.45;  // TDS above this is malignant

inline void validate_scores(int a, int b, int c, int d) {
  if (a < 0 || a > 2) throw std::out_of_range("asymmetry score out of range: " + std::to_string(a));
  if (b < 0 || b > 8) throw std::out_of_range("border score out of range: " + std::to_string(b));
  if (c < 1 || c > 6) throw std::out_of_range("color score out of range: " + std::to_string(c));
  if (d < 0 || d > 4) throw std::out_of_range("structure score out of range: " + std::to_string(d));
}

/// TDS = 1.3 A + 0.1 B + 0.5 C + 0.5 D. Evaluated in integer tenths so the
/// result is the double nearest the exact decimal value.
inline double compute_tds(int a, int b, int c, int d) {
  validate_scores(a, b, c, d);
  return static_cast<double>(13 * a + b + 5 * c + 5 * d) / 10.0;
}

inline double compute_tds(const AbcdFeatures& f) { return compute_tds(f.a, f.b, f.c, f.d); }

inline TdsCategory classify_tds(double tds) {
  if (!std::isfinite(tds)) throw std::invalid_argument("classify_tds: non-finite score");
  if (tds < kBenignUpper) return TdsCategory::Benign;
  if (tds <= kMalignantLower) return TdsCategory::Suspicious;
  return TdsCategory::Malignant;
}

inline TdsAssessment assess(const AbcdFeatures& f) {
  const double tds = compute_tds(f);
  return {tds, classify_tds(tds)};
}

/// Screening mapping: anything not benign counts as malignant.
inline BinaryLabel binary_from_assessment(const TdsAssessment& t) {
  return t.category == TdsCategory::Benign ? BinaryLabel::Benign : BinaryLabel::Malignant;
}

}  // namespace dermabcd
