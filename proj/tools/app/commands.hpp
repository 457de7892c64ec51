#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dermabcd/dataset.hpp"
#include "dermabcd/error.hpp"
#include "dermabcd/ml.hpp"
#include "dermabcd/pipeline.hpp"
#include "dermabcd/synthetic.hpp"

#include "codec.hpp"
#include "config.hpp"
#include "overlays.hpp"
#include "reports.hpp"

namespace dermabcd::app {

enum ExitCode : int { kOk = 0, kUsage = 1, kDomain = 2, kIo = 3 };

/// Fraction of failed images above which a batch run is a domain failure.
inline constexpr double kMaxFailureFraction = 0.20;

/// Runs fn(i) for i in [0, n) on `workers` threads. Each index is handled
/// exactly once; callers store results by index.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

struct ImageOutcome {
  std::optional<FeatureRow> row;
  std::string error_kind;
  std::string error;
};

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const SegmentationError*>(&e)) return "segmentation";
  if (dynamic_cast<const FeatureError*>(&e)) return "feature";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  return "internal";
}

/// Extracts features for every manifest record. Per-image failures are
/// captured in the outcome, never thrown. `on_success` (optional) sees each
/// successful extraction on the worker thread that produced it.
inline std::vector<ImageOutcome> extract_records(
    const std::vector<LesionRecord>& records, const PipelineConfig& cfg, int workers,
    const std::function<void(std::size_t, const Extraction&)>& on_success = {}) {
  std::vector<ImageOutcome> out(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const auto& rec = records[i];
    try {
      const ImageBuffer img = read_rgb(rec.image_path);
      const Extraction e = extract_features(img, cfg);
      FeatureRow r;
      r.image_id = rec.image_id;
      r.a = e.features.a;
      r.b = e.features.b;
      r.c = e.features.c;
      r.d = e.features.d;
      r.tds = e.assessment.tds;
      r.category = e.assessment.category;
      r.label = rec.label;
      if (on_success) on_success(i, e);
      out[i].row = std::move(r);
    } catch (const DomainError& e) {
      out[i].error_kind = error_kind(e);
      out[i].error = e.what();
    } catch (const IoError& e) {
      out[i].error_kind = error_kind(e);
      out[i].error = e.what();
    }
  });
  return out;
}

struct BatchResult {
  FeatureTable table;
  std::size_t failed = 0;
  std::size_t total = 0;

  bool too_many_failures() const {
    return total > 0 && static_cast<double>(failed) > kMaxFailureFraction * static_cast<double>(total);
  }
};

/// Extraction over a manifest with failures logged to `log` in manifest order.
inline BatchResult extract_manifest(const Manifest& manifest, const std::string& source, const RunConfig& cfg,
                                    std::ostream& log, const std::optional<std::filesystem::path>& overlay_dir = {}) {
  std::function<void(std::size_t, const Extraction&)> hook;
  if (overlay_dir) {
    hook = [&](std::size_t i, const Extraction& e) { write_overlays(*overlay_dir, manifest.records[i].image_id, e); };
  }
  const auto outcomes = extract_records(manifest.records, cfg.pipeline, cfg.workers, hook);
  BatchResult b;
  b.total = outcomes.size();
  b.table.stream = cfg.stream();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].row) {
      b.table.rows.push_back(*outcomes[i].row);
    } else {
      ++b.failed;
      log << "failed " << manifest.records[i].image_id << " [" << outcomes[i].error_kind << "]: " << outcomes[i].error
          << "\n";
    }
  }
  b.table.excluded = b.failed;
  b.table.provenance["seed"] = std::to_string(cfg.seed());
  b.table.provenance["stream"] = std::string(stream_name(cfg.stream()));
  b.table.provenance["source"] = source;
  b.table.provenance["excluded"] = std::to_string(b.failed);
  return b;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Commands. Each returns an exit code; exceptions are mapped by run_guarded.

struct AssessOptions {
  std::filesystem::path image;
  std::optional<std::filesystem::path> out_dir;
  bool overlays = false;
};

inline int cmd_assess(const AssessOptions& opt, const RunConfig& cfg, std::ostream& out) {
  const ImageBuffer img = read_rgb(opt.image);
  const Extraction e = extract_features(img, cfg.pipeline);
  const auto j = assessment_json(opt.image.filename().string(), e, cfg.pipeline);
  out << j.dump(2) << "\n";
  if (opt.out_dir || opt.overlays) {
    const auto dir = opt.out_dir.value_or(".");
    ensure_dir(dir);
    const std::string stem = opt.image.stem().string();
    if (opt.out_dir) write_text(dir / (stem + ".assessment.json"), j.dump(2) + "\n");
    if (opt.overlays) write_overlays(dir, stem, e);
  }
  return kOk;
}

struct ExtractOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir = ".";
  bool overlays = false;
};

inline int cmd_extract(const ExtractOptions& opt, const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const Manifest m = read_manifest(opt.manifest);
  ensure_dir(opt.out_dir);
  std::optional<std::filesystem::path> overlay_dir;
  if (opt.overlays) {
    overlay_dir = opt.out_dir / "overlays";
    ensure_dir(*overlay_dir);
  }
  const BatchResult b = extract_manifest(m, opt.manifest.filename().string(), cfg, log, overlay_dir);
  const auto path = opt.out_dir / "features.csv";
  write_features_csv(path, b.table);
  out << "extracted " << b.table.rows.size() << " of " << b.total << " images (" << b.failed << " failed) -> "
      << path.string() << "\n";
  if (b.too_many_failures()) {
    log << "error: " << b.failed << " of " << b.total << " images failed feature extraction\n";
    return kDomain;
  }
  return kOk;
}

struct EvaluateOptions {
  std::filesystem::path input;  // features CSV or manifest
  std::filesystem::path out_dir = ".";
};

enum class InputKind { Features, Manifest };

inline InputKind sniff_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    const auto l = csv::strip_cr(line);
    if (csv::is_blank(l) || l.front() == '#') continue;
    if (l == kFeaturesHeader) return InputKind::Features;
    if (l == kManifestHeader) return InputKind::Manifest;
    break;
  }
  throw ParseError(path.string() + " is neither a features file nor a manifest");
}

inline int cmd_evaluate(const EvaluateOptions& opt, const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  FeatureTable table;
  ensure_dir(opt.out_dir);
  if (sniff_input(opt.input) == InputKind::Features) {
    table = read_features_csv(opt.input);
  } else {
    const Manifest m = read_manifest(opt.input);
    BatchResult b = extract_manifest(m, opt.input.filename().string(), cfg, log);
    write_features_csv(opt.out_dir / "features.csv", b.table);
    if (b.too_many_failures()) {
      log << "error: " << b.failed << " of " << b.total << " images failed feature extraction\n";
      return kDomain;
    }
    table = std::move(b.table);
  }
  const EvaluationReport r = evaluate_rule_and_model(table.rows, cfg.seed(), cfg.evaluation, table.excluded);
  const std::string text = metrics_table(r, table.stream);
  write_text(opt.out_dir / "metrics.json", evaluation_json(r, table.stream, cfg.seed()).dump(2) + "\n");
  write_text(opt.out_dir / "metrics.txt", text);
  out << text;
  return kOk;
}

struct FixtureOptions {
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
};

inline nlohmann::ordered_json fixture_truth_json(const synthetic::Fixture& f, std::uint64_t corpus_seed) {
  return {
      {"image_id", f.id},
      {"kind", std::string(synthetic::kind_name(f.kind))},
      {"label", std::string(label_name(f.label))},
      {"dx", f.dx},
      {"corpus_seed", corpus_seed},
      {"fixture_seed", f.seed},
      {"image", "images/" + f.id + ".png"},
      {"mask", "masks/" + f.id + ".png"},
      {"width", f.image.width()},
      {"height", f.image.height()},
      {"area", f.truth.area()},
      {"center", {f.center_x, f.center_y}},
      {"radius", f.radius},
      {"expected_a", {{"min", f.expected_a_min}, {"max", f.expected_a_max}}},
      {"colors", f.colors},
      {"dots", f.dots},
      {"hairs", f.hairs},
  };
}

inline int cmd_make_fixtures(const FixtureOptions& opt, std::ostream& out) {
  const auto corpus = synthetic::make_corpus(opt.seed);
  for (const char* sub : {"images", "masks", "truth"}) ensure_dir(opt.out_dir / sub);
  Manifest m;
  m.provenance["generator"] = "synthetic";
  m.provenance["seed"] = std::to_string(opt.seed);
  for (const auto& f : corpus) {
    write_png(opt.out_dir / "images" / (f.id + ".png"), f.image);
    write_mask_png(opt.out_dir / "masks" / (f.id + ".png"), f.truth);
    write_text(opt.out_dir / "truth" / (f.id + ".json"), fixture_truth_json(f, opt.seed).dump(2) + "\n");
    m.records.push_back({f.id, "images/" + f.id + ".png", f.dx, f.label});
  }
  write_manifest(opt.out_dir / "manifest.csv", m);
  out << "wrote " << corpus.size() << " fixtures to " << opt.out_dir.string() << "\n";
  return kOk;
}

/// Maps exceptions to exit codes and prints a JSON error object on `err`.
template <typename Fn>
int run_guarded(Fn&& fn, std::ostream& err) {
  const auto fail = [&](int code, std::string_view kind, const std::string& msg) {
    err << error_json(kind, msg).dump() << "\n";
    return code;
  };
  try {
    return fn();
  } catch (const ConfigError& e) {
    return fail(kUsage, "config", e.what());
  } catch (const SegmentationError& e) {
    return fail(kDomain, "segmentation", e.what());
  } catch (const DomainError& e) {
    return fail(kDomain, error_kind(e), e.what());
  } catch (const IoError& e) {
    return fail(kIo, "io", e.what());
  } catch (const ParseError& e) {
    return fail(kIo, "parse", e.what());
  } catch (const std::exception& e) {
    return fail(kDomain, "internal", e.what());
  }
}

}  // namespace dermabcd::app
