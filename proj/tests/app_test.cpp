#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "app/commands.hpp"
#include "test_util.hpp"

using namespace dermabcd;
using namespace dermabcd::app;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes the synthetic corpus and a manifest holding `ids` (relative paths).
fs::path fixture_manifest(const fs::path& dir, const std::vector<std::string>& ids) {
  std::ostringstream sink;
  cmd_make_fixtures({dir / "fx", 42}, sink);
  const Manifest all = read_manifest(dir / "fx" / "manifest.csv", FileCheck::Skip, false);
  Manifest m;
  for (const auto& r : all.records) {
    if (std::find(ids.begin(), ids.end(), r.image_id) == ids.end()) continue;
    LesionRecord rec = r;
    rec.image_path = "fx/" + r.image_path;
    m.records.push_back(rec);
  }
  write_manifest(dir / "manifest.csv", m);
  return dir / "manifest.csv";
}

std::vector<std::string> ids(std::initializer_list<int> idx) {
  std::vector<std::string> out;
  for (int i : idx) {
    char b[16];
    std::snprintf(b, sizeof b, "fx%03d", i);
    out.emplace_back(b);
  }
  return out;
}

FeatureRow row(std::string id, int a, int b, int c, int d, BinaryLabel label) {
  FeatureRow r;
  r.image_id = std::move(id);
  r.a = a;
  r.b = b;
  r.c = c;
  r.d = d;
  r.tds = compute_tds(a, b, c, d);
  r.category = classify_tds(r.tds);
  r.label = label;
  return r;
}

int run_cli(const std::string& args, const fs::path& out_file = {}) {
  std::string cmd = std::string(DERMABCD_CLI_PATH) + " " + args;
  cmd += out_file.empty() ? " >/dev/null" : " >" + out_file.string();
  cmd += " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, UnknownKeysAreRejected) {
  RunConfig cfg;
  EXPECT_THROW(apply_config(nlohmann::json::parse(R"({"strem":"median"})"), cfg), ConfigError);
  EXPECT_THROW(apply_config(nlohmann::json::parse(R"({"color":{"k":3}})"), cfg), ConfigError);
  EXPECT_THROW(apply_config(nlohmann::json::parse(R"({"stream":"bilateral"})"), cfg), ConfigError);
  EXPECT_THROW(apply_config(nlohmann::json::parse(R"({"seed":"x"})"), cfg), ConfigError);
  EXPECT_THROW(apply_config(nlohmann::json::parse("[1]"), cfg), ConfigError);
}

TEST(Config, EffectiveConfigRoundTrips) {
  RunConfig cfg;
  apply_config(nlohmann::json::parse(R"({"stream":"flat","seed":9,"workers":3,"color":{"clusters":6}})"), cfg);
  EXPECT_EQ(cfg.stream(), FilterKind::FlatAverage3);
  EXPECT_EQ(cfg.seed(), 9u);
  EXPECT_EQ(cfg.workers, 3);
  EXPECT_EQ(cfg.pipeline.color.clusters, 6);
  RunConfig back;
  apply_config(nlohmann::json::parse(config_to_json(cfg).dump()), back);
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
  EXPECT_NO_THROW(validate(back));
  back.evaluation.train_fraction = 1.0;
  EXPECT_THROW(validate(back), ConfigError);
}

TEST(FeaturesCsv, RoundTripKeepsEverything) {
  FeatureTable t;
  t.stream = FilterKind::Gaussian3Sigma1;
  t.provenance = {{"seed", "5"}, {"stream", "gaussian"}};
  t.excluded = 0;
  t.rows = {row("a,1", 0, 8, 1, 3, BinaryLabel::Benign), row("b", 2, 8, 4, 4, BinaryLabel::Malignant),
            row("c", 1, 3, 2, 2, BinaryLabel::Benign)};
  std::ostringstream out;
  write_features_csv(out, t);
  EXPECT_NE(out.str().find(std::string(kFeaturesHeader) + "\n"), std::string::npos);
  std::istringstream in(out.str());
  const FeatureTable back = read_features_csv(in);
  EXPECT_EQ(back.stream, t.stream);
  EXPECT_EQ(back.provenance, t.provenance);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].image_id, t.rows[i].image_id);
    EXPECT_EQ(back.rows[i].a, t.rows[i].a);
    EXPECT_EQ(back.rows[i].d, t.rows[i].d);
    EXPECT_DOUBLE_EQ(back.rows[i].tds, t.rows[i].tds);
    EXPECT_EQ(back.rows[i].category, t.rows[i].category);
    EXPECT_EQ(back.rows[i].label, t.rows[i].label);
  }
  std::ostringstream again;
  write_features_csv(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(FeaturesCsv, MalformedRowsAreParseErrors) {
  const std::string h = std::string(kFeaturesHeader) + "\n";
  auto read = [](const std::string& s) {
    std::istringstream in(s);
    return read_features_csv(in);
  };
  EXPECT_THROW(read(h + "x,median,9,0,1,0,11.7,malignant,benign\n"), ParseError);
  EXPECT_THROW(read(h + "x,median,0,0,1,0,abc,benign,benign\n"), ParseError);
  EXPECT_THROW(read(h + "x,median,0,0,1,0\n"), ParseError);
  EXPECT_THROW(read("image_id,a\n"), ParseError);
}

TEST(Codec, PngRoundTripIsExact) {
  const auto dir = testutil::temp_dir("codec");
  std::mt19937_64 gen(3);
  const GrayImage g = testutil::random_gray(33, 17, gen);
  ImageBuffer rgb(33, 17, 3);
  for (auto& v : rgb.data()) v = static_cast<std::uint8_t>(gen() & 0xff);
  write_png(dir / "rgb.png", rgb);
  write_png(dir / "g.png", g);
  EXPECT_EQ(read_rgb(dir / "rgb.png"), rgb);
  EXPECT_EQ(read_gray(dir / "g.png"), g);
  const BinaryMask m = testutil::disk_mask(40, 30, 20, 15, 9);
  write_mask_png(dir / "m.png", m);
  EXPECT_EQ(read_mask_png(dir / "m.png"), m);
  // A gray PNG loads as three equal channels.
  const ImageBuffer expanded = read_rgb(dir / "g.png");
  EXPECT_EQ(expanded.channel(0), g);
  EXPECT_EQ(expanded.channel(2), g);
}

TEST(Codec, UnreadableFilesAreIoErrors) {
  const auto dir = testutil::temp_dir("codec_bad");
  std::ofstream(dir / "bad.png") << "not an image";
  EXPECT_THROW(read_rgb(dir / "bad.png"), IoError);
  EXPECT_THROW(read_rgb(dir / "missing.png"), IoError);
}

TEST(MakeFixtures, WritesCorpusDeterministically) {
  const auto dir = testutil::temp_dir("fixtures");
  std::ostringstream sink;
  ASSERT_EQ(cmd_make_fixtures({dir / "a", 42}, sink), kOk);
  ASSERT_EQ(cmd_make_fixtures({dir / "b", 42}, sink), kOk);
  std::size_t images = 0;
  for (const auto& e : fs::directory_iterator(dir / "a" / "images")) {
    ++images;
    const auto name = e.path().filename();
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / "images" / name));
    EXPECT_TRUE(fs::exists(dir / "a" / "masks" / name));
    const auto truth = nlohmann::json::parse(slurp(dir / "a" / "truth" / (e.path().stem().string() + ".json")));
    EXPECT_EQ(truth.at("corpus_seed"), 42);
    EXPECT_GT(truth.at("area").get<int>(), 0);
  }
  EXPECT_GE(images, 40u);
  EXPECT_EQ(slurp(dir / "a" / "manifest.csv"), slurp(dir / "b" / "manifest.csv"));
  const Manifest m = read_manifest(dir / "a" / "manifest.csv", FileCheck::Require);
  EXPECT_EQ(m.records.size(), images);
  EXPECT_EQ(read_mask_png(dir / "a" / "masks" / "fx000.png"), synthetic::make_corpus(42)[0].truth);
}

TEST(Extract, TenImagesGiveTenRowsAndRerunsMatch) {
  const auto dir = testutil::temp_dir("extract");
  const auto manifest = fixture_manifest(dir, ids({0, 6, 12, 18, 24, 27, 30, 33, 40, 44}));
  RunConfig cfg;
  cfg.pipeline.seed = 11;
  std::ostringstream out, log;
  ASSERT_EQ(cmd_extract({manifest, dir / "r1", false}, cfg, out, log), kOk);
  cfg.workers = 4;
  ASSERT_EQ(cmd_extract({manifest, dir / "r2", false}, cfg, out, log), kOk);
  const std::string a = slurp(dir / "r1" / "features.csv");
  EXPECT_EQ(a, slurp(dir / "r2" / "features.csv"));
  const FeatureTable t = read_features_csv(dir / "r1" / "features.csv");
  EXPECT_EQ(t.rows.size(), 10u);
  EXPECT_EQ(t.provenance.at("seed"), "11");
  EXPECT_EQ(t.provenance.at("stream"), "median");
  EXPECT_TRUE(log.str().empty());
}

TEST(Extract, MissingImageIsLoggedAndRunContinues) {
  const auto dir = testutil::temp_dir("extract_missing");
  const auto manifest = fixture_manifest(dir, ids({0, 12, 24}));
  Manifest m = read_manifest(manifest, FileCheck::Skip, false);
  m.records.push_back({"ghost", "fx/images/ghost.png", "nv", BinaryLabel::Benign});
  write_manifest(manifest, m);
  RunConfig cfg;
  std::ostringstream out, log;
  // One failure in four exceeds the tolerated fraction, so the run reports a domain failure.
  EXPECT_EQ(cmd_extract({manifest, dir / "r", false}, cfg, out, log), kDomain);
  EXPECT_NE(log.str().find("ghost"), std::string::npos);
  const FeatureTable t = read_features_csv(dir / "r" / "features.csv");
  EXPECT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.excluded, 1u);
}

TEST(Extract, FewFailuresStillSucceed) {
  const auto dir = testutil::temp_dir("extract_few");
  const auto manifest = fixture_manifest(dir, ids({0, 1, 12, 13, 18, 24, 25, 26, 40}));
  Manifest m = read_manifest(manifest, FileCheck::Skip, false);
  m.records.push_back({"ghost", "fx/images/ghost.png", "mel", BinaryLabel::Malignant});
  write_manifest(manifest, m);
  RunConfig cfg;
  std::ostringstream out, log;
  EXPECT_EQ(cmd_extract({manifest, dir / "r", false}, cfg, out, log), kOk);
  EXPECT_EQ(read_features_csv(dir / "r" / "features.csv").rows.size(), 9u);
}

TEST(Evaluate, SeparableFeaturesAreClassifiedPerfectly) {
  const auto dir = testutil::temp_dir("evaluate");
  FeatureTable t;
  for (int i = 0; i < 30; ++i) {
    t.rows.push_back(row("b" + std::to_string(i), 0, i % 3, 1, i % 2, BinaryLabel::Benign));
    t.rows.push_back(row("m" + std::to_string(i), 2, 6 + i % 3, 4 + i % 2, 3, BinaryLabel::Malignant));
  }
  write_features_csv(dir / "features.csv", t);
  RunConfig cfg;
  cfg.pipeline.seed = 3;
  std::ostringstream out, log;
  ASSERT_EQ(cmd_evaluate({dir / "features.csv", dir / "out"}, cfg, out, log), kOk);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "metrics.json"));
  EXPECT_EQ(j.at("seed"), 3);
  EXPECT_EQ(j.at("stream"), "median");
  ASSERT_EQ(j.at("methods").size(), 2u);
  EXPECT_EQ(j.at("methods")[0].at("method"), "tds_rule");
  EXPECT_EQ(j.at("methods")[1].at("method"), "logistic_regression");
  for (const auto& m : j.at("methods")) {
    EXPECT_DOUBLE_EQ(m.at("accuracy").get<double>(), 1.0);
    EXPECT_EQ(m.at("seed"), 3);
  }
  EXPECT_EQ(slurp(dir / "out" / "metrics.txt"), out.str());
}

TEST(Evaluate, SingleClassIsAnEvaluationError) {
  const auto dir = testutil::temp_dir("evaluate_single");
  FeatureTable t;
  for (int i = 0; i < 20; ++i) t.rows.push_back(row("b" + std::to_string(i), 0, 1, 1, 1, BinaryLabel::Benign));
  write_features_csv(dir / "features.csv", t);
  std::ostringstream out, log, err;
  const int code = run_guarded([&] { return cmd_evaluate({dir / "features.csv", dir / "out"}, RunConfig{}, out, log); },
                               err);
  EXPECT_EQ(code, kDomain);
  EXPECT_NE(err.str().find("\"error\""), std::string::npos);
}

TEST(RunGuarded, MapsErrorsToExitCodes) {
  std::ostringstream err;
  EXPECT_EQ(run_guarded([]() -> int { throw ConfigError("x"); }, err), kUsage);
  EXPECT_EQ(run_guarded([]() -> int { throw SegmentationError("x"); }, err), kDomain);
  EXPECT_EQ(run_guarded([]() -> int { throw IoError("x"); }, err), kIo);
  EXPECT_EQ(run_guarded([]() -> int { throw ParseError("x", 4); }, err), kIo);
  EXPECT_EQ(run_guarded([]() -> int { throw std::runtime_error("x"); }, err), kDomain);
  EXPECT_EQ(run_guarded([] { return kOk; }, err), kOk);
}

TEST(Cli, ExitCodesForBadInputs) {
  const auto dir = testutil::temp_dir("cli_codes");
  std::ofstream(dir / "corrupt.png") << "garbage";
  write_png(dir / "blank.png", ImageBuffer(64, 64, 3, 170));
  std::ofstream(dir / "bad.json") << R"({"unknown_key": 1})";
  write_png(dir / "ok.png", synthetic::make_fixture(synthetic::FixtureKind::SoftDisk, 1).image);
  EXPECT_EQ(run_cli("assess " + (dir / "corrupt.png").string()), 3);
  EXPECT_EQ(run_cli("assess " + (dir / "missing.png").string()), 3);
  EXPECT_EQ(run_cli("assess " + (dir / "blank.png").string()), 2);
  EXPECT_EQ(run_cli("assess --config " + (dir / "bad.json").string() + " " + (dir / "ok.png").string()), 1);
  EXPECT_EQ(run_cli("assess --stream bilateral " + (dir / "ok.png").string()), 1);
  EXPECT_EQ(run_cli("assess"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("assess " + (dir / "ok.png").string()), 0);
}

TEST(Cli, AssessReportsScoresWithSeedAndStream) {
  const auto dir = testutil::temp_dir("cli_assess");
  const auto benign = synthetic::make_fixture(synthetic::FixtureKind::SoftDisk, 5);
  const auto malignant = synthetic::make_fixture(synthetic::FixtureKind::Irregular, 5);
  write_png(dir / "benign.png", benign.image);
  write_png(dir / "malignant.png", malignant.image);
  ASSERT_EQ(run_cli("assess --seed 17 --stream gaussian " + (dir / "benign.png").string(), dir / "b.json"), 0);
  ASSERT_EQ(run_cli("assess " + (dir / "malignant.png").string(), dir / "m.json"), 0);
  const auto b = nlohmann::json::parse(slurp(dir / "b.json"));
  const auto m = nlohmann::json::parse(slurp(dir / "m.json"));
  EXPECT_EQ(b.at("seed"), 17);
  EXPECT_EQ(b.at("stream"), "gaussian");
  EXPECT_EQ(b.at("category"), "Benign");
  EXPECT_LE(b.at("tds").get<double>(), 2.0 + 1e-9);
  EXPECT_EQ(m.at("seed"), 0);
  EXPECT_EQ(m.at("category"), "Malignant");
  EXPECT_GT(m.at("tds").get<double>(), 5.45);
  EXPECT_EQ(m.at("a"), 2);
}

TEST(Cli, AssessWritesOverlaysOnRequest) {
  const auto dir = testutil::temp_dir("cli_overlays");
  write_png(dir / "x.png", synthetic::make_fixture(synthetic::FixtureKind::Irregular, 2).image);
  ASSERT_EQ(run_cli("assess --overlays --out " + (dir / "o").string() + " " + (dir / "x.png").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "x.assessment.json"));
  std::size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(dir / "o")) pngs += e.path().extension() == ".png";
  EXPECT_GT(pngs, 0u);
}
