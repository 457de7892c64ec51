#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dermabcd/csv.hpp"
#include "dermabcd/error.hpp"
#include "dermabcd/ml.hpp"
#include "dermabcd/pipeline.hpp"
#include "dermabcd/scoring.hpp"

namespace dermabcd::app {

using ordered_json = nlohmann::ordered_json;

/// TDS values are multiples of 0.1, so one decimal is exact.
inline std::string format_tds(double tds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", tds);
  return buf;
}

inline ordered_json features_json(const AbcdFeatures& f) {
  ordered_json rays = ordered_json::array();
  for (std::size_t i = 0; i < f.border.points.size(); ++i) {
    rays.push_back({{"x", f.border.points[i].x}, {"y", f.border.points[i].y}, {"gradient", f.border.gradients[i]}});
  }
  ordered_json clusters = ordered_json::array();
  for (const auto& c : f.color.clusters) {
    clusters.push_back({{"L", c.center.L}, {"a", c.center.a}, {"b", c.center.b}, {"pixels", c.pixel_count},
                        {"fraction", c.fraction}});
  }
  const auto& s = f.structures;
  return {
      {"asymmetry",
       {{"angle", f.asymmetry.angle}, {"d_major", f.asymmetry.d_major}, {"d_minor", f.asymmetry.d_minor}}},
      {"border", {{"rays", rays}}},
      {"color", {{"clusters", clusters}}},
      {"structures",
       {{"structureless", s.structureless},
        {"dots_globules", s.dots_globules},
        {"pigment_network", s.pigment_network},
        {"streaks", s.streaks},
        {"median_local_variance", s.median_local_variance},
        {"blob_count", s.blobs.size()},
        {"branch_point_count", s.branch_points.size()},
        {"segment_count", s.segments.size()}}},
  };
}

inline ordered_json assessment_json(const std::string& image, const Extraction& e, const PipelineConfig& cfg) {
  const auto& f = e.features;
  return {
      {"image", image},
      {"stream", std::string(stream_name(cfg.stream))},
      {"seed", cfg.seed},
      {"a", f.a},
      {"b", f.b},
      {"c", f.c},
      {"d", f.d},
      {"tds", e.assessment.tds},
      {"category", std::string(category_name(e.assessment.category))},
      {"lesion_area", e.mask.area()},
      {"measurements", features_json(f)},
  };
}

inline ordered_json error_json(std::string_view kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

// ---------------------------------------------------------------------------
// Features CSV

inline constexpr std::string_view kFeaturesHeader = "image_id,stream,a,b,c,d,tds,category,label";

struct FeatureTable {
  std::map<std::string, std::string> provenance;  // "# key=value" lines
  FilterKind stream = FilterKind::Median3;
  std::vector<FeatureRow> rows;
  std::size_t excluded = 0;
};

inline void write_features_csv(std::ostream& out, const FeatureTable& t) {
  for (const auto& [k, v] : t.provenance) out << "# " << k << "=" << v << "\n";
  out << kFeaturesHeader << "\n";
  const std::string stream(stream_name(t.stream));
  for (const auto& r : t.rows) {
    out << csv::quote(r.image_id) << ',' << stream << ',' << r.a << ',' << r.b << ',' << r.c << ',' << r.d << ','
        << format_tds(r.tds) << ',' << category_name(r.category) << ',' << label_name(r.label) << "\n";
  }
}

inline void write_features_csv(const std::filesystem::path& path, const FeatureTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_features_csv(out, t);
  if (!out) throw IoError("failed writing " + path.string());
}

namespace detail {

inline int parse_int(const std::string& s, long row, const char* what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParseError(std::string("bad ") + what + " '" + s + "'", row);
  return v;
}

inline double parse_double(const std::string& s, long row, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParseError(std::string("bad ") + what + " '" + s + "'", row);
  return v;
}

}  // namespace detail

/// Reads a features CSV. Scores are range-checked and the tds column must
/// agree with the scores.
inline FeatureTable read_features_csv(std::istream& in) {
  FeatureTable t;
  std::string line;
  long row = 0;
  bool have_header = false;
  std::optional<std::string> stream;
  while (std::getline(in, line)) {
    ++row;
    const auto l = csv::strip_cr(line);
    if (csv::is_blank(l)) continue;
    if (l.front() == '#') {
      auto body = l.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) t.provenance[std::string(body.substr(0, eq))] = std::string(body.substr(eq + 1));
      continue;
    }
    if (!have_header) {
      if (l != kFeaturesHeader) throw ParseError("features header must be " + std::string(kFeaturesHeader), row);
      have_header = true;
      continue;
    }
    const auto f = csv::split_line(l, row);
    if (f.size() != 9) throw ParseError("feature rows need 9 fields", row);
    if (!stream) stream = f[1];
    if (f[1] != *stream) throw ParseError("mixed streams in one features file", row);
    FeatureRow r;
    r.image_id = f[0];
    r.a = detail::parse_int(f[2], row, "a");
    r.b = detail::parse_int(f[3], row, "b");
    r.c = detail::parse_int(f[4], row, "c");
    r.d = detail::parse_int(f[5], row, "d");
    try {
      validate_scores(r.a, r.b, r.c, r.d);
    } catch (const std::out_of_range& e) {
      throw ParseError(e.what(), row);
    }
    r.tds = compute_tds(r.a, r.b, r.c, r.d);
    if (std::abs(detail::parse_double(f[6], row, "tds") - r.tds) > 1e-6) throw ParseError("tds does not match scores", row);
    const auto cat = parse_category(f[7]);
    if (!cat) throw ParseError("unknown category '" + f[7] + "'", row);
    r.category = *cat;
    if (r.category != classify_tds(r.tds)) throw ParseError("category does not match tds", row);
    const auto label = parse_label(f[8]);
    if (!label) throw ParseError("unknown label '" + f[8] + "'", row);
    r.label = *label;
    t.rows.push_back(std::move(r));
  }
  if (!have_header) throw ParseError("features file has no header");
  if (stream) {
    const auto k = parse_stream(*stream);
    if (!k) throw ParseError("unknown stream '" + *stream + "'");
    t.stream = *k;
  } else if (const auto it = t.provenance.find("stream"); it != t.provenance.end()) {
    if (const auto k = parse_stream(it->second)) t.stream = *k;
  }
  if (const auto it = t.provenance.find("excluded"); it != t.provenance.end()) {
    t.excluded = static_cast<std::size_t>(detail::parse_int(it->second, -1, "excluded count"));
  }
  return t;
}

inline FeatureTable read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open features file " + path.string());
  return read_features_csv(in);
}

// ---------------------------------------------------------------------------
// Metrics

inline ordered_json metrics_json(const MetricsReport& m, std::string_view stream, std::string_view method,
                                 std::size_t excluded, std::uint64_t seed) {
  ordered_json j = {
      {"stream", stream},
      {"method", method},
      {"tp", m.tp},
      {"fp", m.fp},
      {"fn", m.fn},
      {"tn", m.tn},
      {"accuracy", m.accuracy},
      {"precision", m.precision},
      {"recall", m.recall},
      {"f1", m.f1},
      {"auc", nullptr},
      {"excluded_count", excluded},
      {"seed", seed},
  };
  if (m.auc) j["auc"] = *m.auc;
  return j;
}

inline ordered_json evaluation_json(const EvaluationReport& r, FilterKind stream, std::uint64_t seed) {
  const std::string s(stream_name(stream));
  ordered_json methods = ordered_json::array();
  for (const auto& m : r.methods) methods.push_back(metrics_json(m.metrics, s, m.method, r.excluded_count, seed));
  ordered_json weights = ordered_json::array();
  for (double w : r.model.weights) weights.push_back(w);
  ordered_json means = ordered_json::array(), stds = ordered_json::array();
  for (double v : r.normalizer.means) means.push_back(v);
  for (double v : r.normalizer.stds) stds.push_back(v);
  return {
      {"stream", s},
      {"seed", seed},
      {"train_count", r.train_count},
      {"test_count", r.test_count},
      {"excluded_count", r.excluded_count},
      {"methods", methods},
      {"model",
       {{"features", {"a", "b", "c", "d", "tds"}},
        {"weights", weights},
        {"bias", r.model.bias},
        {"learning_rate", r.model.config.learning_rate},
        {"epochs", r.model.config.epochs},
        {"normalizer", {{"means", means}, {"stds", stds}}}}},
  };
}

/// Aligned text table: Stream, Model, Acc, Prec, Rec, F1, AUC.
inline std::string metrics_table(const EvaluationReport& r, FilterKind stream) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %-20s %6s %6s %6s %6s %6s\n", "Stream", "Model", "Acc", "Prec", "Rec", "F1", "AUC");
  out << buf;
  const std::string s(stream_name(stream));
  for (const auto& m : r.methods) {
    const auto& x = m.metrics;
    char auc[16];
    if (x.auc) std::snprintf(auc, sizeof auc, "%.3f", *x.auc);
    else std::snprintf(auc, sizeof auc, "%s", "n/a");
    std::snprintf(buf, sizeof buf, "%-8s %-20s %6.3f %6.3f %6.3f %6.3f %6s\n", s.c_str(), m.method.c_str(), x.accuracy,
                  x.precision, x.recall, x.f1, auc);
    out << buf;
  }
  return out.str();
}

}  // namespace dermabcd::app
