#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dermabcd/csv.hpp"
#include "dermabcd/error.hpp"
#include "dermabcd/random.hpp"
#include "dermabcd/scoring.hpp"

namespace dermabcd {

inline constexpr std::array<std::string_view, 7> kDiagnosisCodes = {"akiec", "bcc", "bkl", "df",
                                                                   "mel",   "nv",  "vasc"};

/// mel, bcc and akiec are malignant; nv, bkl, df and vasc are benign.
inline BinaryLabel binary_label(std::string_view dx) {
  if (dx == "mel" || dx == "bcc" || dx == "akiec") return BinaryLabel::Malignant;
  if (dx == "nv" || dx == "bkl" || dx == "df" || dx == "vasc") return BinaryLabel::Benign;
  throw ParseError("unknown diagnosis code '" + std::string(dx) + "'");
}

struct LesionRecord {
  std::string image_id;
  std::string image_path;
  std::string dx;
  BinaryLabel label = BinaryLabel::Benign;

  friend bool operator==(const LesionRecord&, const LesionRecord&) = default;
};

struct Manifest {
  std::vector<LesionRecord> records;
  // Free-form key/value provenance written as "# key=value" lines.
  std::map<std::string, std::string> provenance;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct MetadataOptions {
  std::string image_dir;
  std::string extension = ".jpg";
};

/// Reads HAM10000-style metadata (header with at least image_id and dx).
/// Row numbers in errors are 1-based file lines.
inline std::vector<LesionRecord> parse_metadata(std::istream& in, const MetadataOptions& opts = {}) {
  std::string line;
  long row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    const auto l = csv::strip_cr(line);
    if (csv::is_blank(l)) continue;
    header = csv::split_line(l, row);
    break;
  }
  if (header.empty()) throw ParseError("metadata file has no header");
  const auto find = [&](std::string_view name) -> long {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<long>(i);
    return -1;
  };
  const long id_col = find("image_id"), dx_col = find("dx");
  if (id_col < 0 || dx_col < 0) throw ParseError("metadata header must contain image_id and dx columns", row);

  std::vector<LesionRecord> out;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++row;
    const auto l = csv::strip_cr(line);
    if (csv::is_blank(l)) continue;
    const auto fields = csv::split_line(l, row);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row);
    }
    LesionRecord r;
    r.image_id = fields[static_cast<std::size_t>(id_col)];
    r.dx = fields[static_cast<std::size_t>(dx_col)];
    if (r.image_id.empty()) throw ParseError("empty image_id", row);
    try {
      r.label = binary_label(r.dx);
    } catch (const ParseError&) {
      throw ParseError("unknown diagnosis code '" + r.dx + "'", row);
    }
    if (!seen.insert(r.image_id).second) throw ParseError("duplicate image_id " + r.image_id, row);
    r.image_path = (std::filesystem::path(opts.image_dir) / (r.image_id + opts.extension)).string();
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<LesionRecord> parse_metadata(const std::filesystem::path& path,
                                                const MetadataOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metadata file " + path.string());
  return parse_metadata(in, opts);
}

/// Seeded sample of per_class records from each class, ordered by image_id.
inline Manifest balanced_subset(const std::vector<LesionRecord>& records, std::size_t per_class,
                                std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < records.size(); ++i)
    by_class[records[i].label == BinaryLabel::Malignant ? 1 : 0].push_back(i);
  if (by_class[0].size() < per_class || by_class[1].size() < per_class) {
    throw EvaluationError("not enough records for a balanced subset of " + std::to_string(per_class) +
                          " per class: benign=" + std::to_string(by_class[0].size()) +
                          " malignant=" + std::to_string(by_class[1].size()));
  }
  Rng rng(seed);
  Manifest m;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t j = 0; j < per_class; ++j) m.records.push_back(records[members[j]]);
  }
  std::sort(m.records.begin(), m.records.end(),
            [](const LesionRecord& a, const LesionRecord& b) { return a.image_id < b.image_id; });
  m.provenance["seed"] = std::to_string(seed);
  m.provenance["per_class"] = std::to_string(per_class);
  return m;
}

inline constexpr std::string_view kManifestHeader = "image_id,image_path,dx,label";

inline void write_manifest(std::ostream& out, const Manifest& m) {
  for (const auto& [k, v] : m.provenance) out << "# " << k << "=" << v << "\n";
  out << kManifestHeader << "\n";
  for (const auto& r : m.records) {
    out << csv::quote(r.image_id) << ',' << csv::quote(r.image_path) << ',' << csv::quote(r.dx) << ','
        << label_name(r.label) << "\n";
  }
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  write_manifest(out, m);
  if (!out) throw IoError("failed writing manifest " + path.string());
}

enum class FileCheck { Skip, Require };

/// Reads a manifest. Relative image paths resolve against `base_dir` when given.
inline Manifest read_manifest(std::istream& in, FileCheck check = FileCheck::Skip,
                              const std::filesystem::path& base_dir = {}) {
  Manifest m;
  std::string line;
  long row = 0;
  bool have_header = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++row;
    const auto l = csv::strip_cr(line);
    if (csv::is_blank(l)) continue;
    if (l.front() == '#') {
      auto body = l.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) m.provenance[std::string(body.substr(0, eq))] = std::string(body.substr(eq + 1));
      continue;
    }
    if (!have_header) {
      if (l != kManifestHeader) throw ParseError("manifest header must be " + std::string(kManifestHeader), row);
      have_header = true;
      continue;
    }
    const auto f = csv::split_line(l, row);
    if (f.size() != 4) throw ParseError("manifest rows need 4 fields", row);
    LesionRecord r{f[0], f[1], f[2], BinaryLabel::Benign};
    const auto label = parse_label(f[3]);
    if (!label) throw ParseError("unknown label '" + f[3] + "'", row);
    r.label = *label;
    try {
      if (binary_label(r.dx) != r.label) throw ParseError("label does not match diagnosis " + r.dx, row);
    } catch (const ParseError& e) {
      if (e.row() >= 0) throw;
      throw ParseError("unknown diagnosis code '" + r.dx + "'", row);
    }
    if (!seen.insert(r.image_id).second) throw ParseError("duplicate image_id " + r.image_id, row);
    if (!base_dir.empty() && std::filesystem::path(r.image_path).is_relative()) {
      r.image_path = (base_dir / r.image_path).string();
    }
    if (check == FileCheck::Require && !std::filesystem::exists(r.image_path)) {
      throw IoError("manifest row " + std::to_string(row) + ": missing image " + r.image_path);
    }
    m.records.push_back(std::move(r));
  }
  if (!have_header) throw ParseError("manifest has no header");
  return m;
}

inline Manifest read_manifest(const std::filesystem::path& path, FileCheck check = FileCheck::Skip,
                              bool resolve_relative = true) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return read_manifest(in, check, resolve_relative ? path.parent_path() : std::filesystem::path{});
}

}  // namespace dermabcd
