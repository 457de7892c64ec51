#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "dermabcd/dataset.hpp"
#include "test_util.hpp"

using namespace dermabcd;

namespace {

std::string metadata(int benign, int malignant) {
  std::ostringstream out;
  out << "lesion_id,image_id,dx,dx_type,age,sex,localization\n";
  const char* ben[] = {"nv", "bkl", "df", "vasc"};
  const char* mal[] = {"mel", "bcc", "akiec"};
  for (int i = 0; i < benign; ++i) out << "HAM_" << i << ",ISIC_b" << 1000 + i << "," << ben[i % 4] << ",histo,50,male,back\n";
  for (int i = 0; i < malignant; ++i) out << "HAM_m" << i << ",ISIC_m" << 1000 + i << "," << mal[i % 3] << ",histo,60,female,face\n";
  return out.str();
}

std::vector<LesionRecord> parse(const std::string& text, const MetadataOptions& opts = {}) {
  std::istringstream in(text);
  return parse_metadata(in, opts);
}

long error_row(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.row();
  }
  return -100;
}

}  // namespace

TEST(BinaryLabel, MappingIsTotalOverTheSevenCodes) {
  const std::map<std::string, BinaryLabel> table = {
      {"mel", BinaryLabel::Malignant}, {"bcc", BinaryLabel::Malignant}, {"akiec", BinaryLabel::Malignant},
      {"nv", BinaryLabel::Benign},     {"bkl", BinaryLabel::Benign},    {"df", BinaryLabel::Benign},
      {"vasc", BinaryLabel::Benign}};
  for (auto code : kDiagnosisCodes) EXPECT_EQ(binary_label(code), table.at(std::string(code))) << code;
  EXPECT_EQ(table.size(), kDiagnosisCodes.size());
  EXPECT_THROW(binary_label("xyz"), ParseError);
  EXPECT_THROW(binary_label("MEL"), ParseError);
  EXPECT_THROW(binary_label(""), ParseError);
}

TEST(ParseMetadata, BklRowIsBenignWithConfiguredPath) {
  MetadataOptions opts;
  opts.image_dir = "/data/images";
  const auto r = parse("lesion_id,image_id,dx\nHAM_0000118,ISIC_0027419,bkl\n", opts);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].image_id, "ISIC_0027419");
  EXPECT_EQ(r[0].dx, "bkl");
  EXPECT_EQ(r[0].label, BinaryLabel::Benign);
  EXPECT_EQ(r[0].image_path, "/data/images/ISIC_0027419.jpg");
}

TEST(ParseMetadata, HeaderOnlyGivesEmptyList) {
  EXPECT_TRUE(parse("image_id,dx\n").empty());
  EXPECT_TRUE(parse("image_id,dx\r\n\r\n").empty());
}

TEST(ParseMetadata, ErrorsNameTheRow) {
  EXPECT_EQ(error_row("image_id,dx\nA,nv\nB,xyz\n"), 3);
  EXPECT_EQ(error_row("image_id,dx\nA,nv\nA,mel\n"), 3);
  EXPECT_EQ(error_row("image_id,dx\nA,nv,extra\n"), 2);
  EXPECT_EQ(error_row("image_id,diagnosis\nA,nv\n"), 1);
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse_metadata(std::filesystem::path("/nonexistent/meta.csv")), IoError);
}

TEST(ParseMetadata, QuotedFieldsAndColumnOrder) {
  const auto r = parse("dx,\"note\",image_id\nmel,\"a, b\",X1\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].image_id, "X1");
  EXPECT_EQ(r[0].label, BinaryLabel::Malignant);
}

TEST(BalancedSubset, SizesAndDeterminism) {
  const auto recs = parse(metadata(40, 25));
  const Manifest a = balanced_subset(recs, 20, 5), b = balanced_subset(recs, 20, 5), c = balanced_subset(recs, 20, 6);
  ASSERT_EQ(a.records.size(), 40u);
  std::size_t mal = 0;
  for (const auto& r : a.records) mal += r.label == BinaryLabel::Malignant;
  EXPECT_EQ(mal, 20u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.records, c.records);
  EXPECT_TRUE(std::is_sorted(a.records.begin(), a.records.end(),
                             [](const LesionRecord& x, const LesionRecord& y) { return x.image_id < y.image_id; }));
  EXPECT_EQ(a.provenance.at("seed"), "5");
  EXPECT_TRUE(balanced_subset(recs, 0, 1).records.empty());
}

TEST(BalancedSubset, FiveHundredPerClass) {
  const auto recs = parse(metadata(800, 600));
  const Manifest m = balanced_subset(recs, 500, 42);
  EXPECT_EQ(m.records.size(), 1000u);
  std::set<std::string> ids;
  for (const auto& r : m.records) ids.insert(r.image_id);
  EXPECT_EQ(ids.size(), 1000u);
}

TEST(BalancedSubset, InsufficientRecordsReportsCounts) {
  const auto recs = parse(metadata(10, 3));
  try {
    balanced_subset(recs, 5, 0);
    FAIL() << "expected an error";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("malignant=3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("benign=10"), std::string::npos);
  }
}

TEST(Manifest, RoundTripThroughFileIsLossless) {
  const auto dir = testutil::temp_dir("manifest");
  MetadataOptions opts;
  opts.image_dir = (dir / "img").string();
  const auto recs = parse(metadata(12, 9), opts);
  Manifest m = balanced_subset(recs, 8, 77);
  m.provenance["source"] = "meta, \"quoted\".csv";
  const auto path = dir / "manifest.csv";
  write_manifest(path, m);
  const Manifest back = read_manifest(path, FileCheck::Skip, false);
  EXPECT_EQ(back, m);
  // Writing the re-read manifest produces the same bytes.
  std::ostringstream s1, s2;
  write_manifest(s1, m);
  write_manifest(s2, back);
  EXPECT_EQ(s1.str(), s2.str());
}

TEST(Manifest, RequiresExistingFilesWhenAsked) {
  const auto dir = testutil::temp_dir("manifest_files");
  std::ofstream(dir / "a.png") << "x";
  Manifest m;
  m.records.push_back({"a", "a.png", "nv", BinaryLabel::Benign});
  m.records.push_back({"b", "b.png", "mel", BinaryLabel::Malignant});
  write_manifest(dir / "m.csv", m);
  EXPECT_THROW(read_manifest(dir / "m.csv", FileCheck::Require), IoError);
  const Manifest loose = read_manifest(dir / "m.csv", FileCheck::Skip);
  EXPECT_EQ(loose.records[0].image_path, (dir / "a.png").string());
  m.records.pop_back();
  write_manifest(dir / "m.csv", m);
  EXPECT_NO_THROW(read_manifest(dir / "m.csv", FileCheck::Require));
}

TEST(Manifest, RejectsInconsistentRows) {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return read_manifest(in);
  };
  const std::string h = "image_id,image_path,dx,label\n";
  EXPECT_THROW(read(h + "a,a.png,mel,benign\n"), ParseError);
  EXPECT_THROW(read(h + "a,a.png,foo,benign\n"), ParseError);
  EXPECT_THROW(read(h + "a,a.png,nv,benign\na,b.png,nv,benign\n"), ParseError);
  EXPECT_THROW(read(h + "a,a.png,nv\n"), ParseError);
  EXPECT_THROW(read("id,path\n"), ParseError);
  EXPECT_THROW(read(""), ParseError);
  EXPECT_EQ(read("# seed=4\n" + h).provenance.at("seed"), "4");
}
