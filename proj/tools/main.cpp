#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "app/commands.hpp"

namespace {

using namespace dermabcd;
using namespace dermabcd::app;

struct SharedFlags {
  std::string stream;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  int workers = 1;
  bool overlays = false;

  CLI::Option* stream_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_shared(CLI::App* cmd, SharedFlags& f, bool overlays) {
  f.stream_opt = cmd->add_option("--stream", f.stream, "Preprocessing stream")
                     ->check(CLI::IsMember({"median", "gaussian", "flat"}));
  f.seed_opt = cmd->add_option("--seed", f.seed, "Random seed (default 0)");
  cmd->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  f.out_opt = cmd->add_option("--out", f.out, "Output directory");
  f.workers_opt = cmd->add_option("--workers", f.workers, "Worker threads (default 1)")->check(CLI::PositiveNumber);
  if (overlays) cmd->add_flag("--overlays", f.overlays, "Write diagnostic overlay images");
}

// Config file first, then explicit flags on top.
RunConfig resolve(const SharedFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) load_config_file(f.config, cfg);
  if (f.stream_opt && f.stream_opt->count()) cfg.pipeline.stream = stream_from_string(f.stream);
  if (f.seed_opt && f.seed_opt->count()) cfg.pipeline.seed = f.seed;
  if (f.workers_opt && f.workers_opt->count()) cfg.workers = f.workers;
  validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dermoscopic ABCD feature extraction and total dermoscopy score"};
  app.require_subcommand(1);

  SharedFlags assess_flags, extract_flags, evaluate_flags, fixture_flags;

  auto* assess = app.add_subcommand("assess", "Assess a single lesion image");
  std::string image;
  assess->add_option("image", image, "PNG or JPEG image")->required();
  add_shared(assess, assess_flags, true);

  auto* extract = app.add_subcommand("extract", "Extract ABCD features for every image in a manifest");
  std::string manifest;
  extract->add_option("manifest", manifest, "Manifest CSV")->required();
  add_shared(extract, extract_flags, true);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate the TDS rule and logistic regression");
  std::string input;
  evaluate->add_option("input", input, "Features CSV or manifest CSV")->required();
  add_shared(evaluate, evaluate_flags, false);

  auto* fixtures = app.add_subcommand("make-fixtures", "Write the synthetic lesion corpus");
  std::string fixture_dir;
  fixtures->add_option("dir", fixture_dir, "Output directory (or use --out)");
  add_shared(fixtures, fixture_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  return run_guarded(
      [&]() -> int {
        if (*assess) {
          const RunConfig cfg = resolve(assess_flags);
          AssessOptions opt;
          opt.image = image;
          if (!assess_flags.out.empty()) opt.out_dir = assess_flags.out;
          opt.overlays = assess_flags.overlays;
          return cmd_assess(opt, cfg, std::cout);
        }
        if (*extract) {
          const RunConfig cfg = resolve(extract_flags);
          ExtractOptions opt;
          opt.manifest = manifest;
          if (!extract_flags.out.empty()) opt.out_dir = extract_flags.out;
          opt.overlays = extract_flags.overlays;
          return cmd_extract(opt, cfg, std::cout, std::cerr);
        }
        if (*evaluate) {
          const RunConfig cfg = resolve(evaluate_flags);
          EvaluateOptions opt;
          opt.input = input;
          if (!evaluate_flags.out.empty()) opt.out_dir = evaluate_flags.out;
          return cmd_evaluate(opt, cfg, std::cout, std::cerr);
        }
        const RunConfig cfg = resolve(fixture_flags);
        FixtureOptions opt;
        opt.seed = cfg.seed();
        if (!fixture_flags.out.empty()) opt.out_dir = fixture_flags.out;
        if (!fixture_dir.empty()) opt.out_dir = fixture_dir;
        if (opt.out_dir.empty()) throw ConfigError("make-fixtures needs an output directory");
        return cmd_make_fixtures(opt, std::cout);
      },
      std::cerr);
}
