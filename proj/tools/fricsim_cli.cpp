// fricsim command line: run a scene, run the block-slide matrix, or validate a config.
//
// Exit codes: 0 success, 1 unexpected failure, 2 config/usage, 3 I/O, 4 mesh,
// 5 domain, 6 solver. Errors print one line "error[<category>]: <message>" on stderr.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fricsim/error.hpp"
#include "fricsim/experiments.hpp"
#include "fricsim/export.hpp"
#include "fricsim/scene.hpp"

namespace {

int exit_code(fricsim::ErrorCategory category) {
  switch (category) {
    case fricsim::ErrorCategory::Config: return 2;
    case fricsim::ErrorCategory::Io: return 3;
    case fricsim::ErrorCategory::Mesh: return 4;
    case fricsim::ErrorCategory::Domain: return 5;
    case fricsim::ErrorCategory::Solver: return 6;
  }
  return 1;
}

int run_scene(const std::string& config_path, const std::string& out_dir) {
  const fricsim::SceneConfig config = fricsim::load_scene_file(config_path);
  fricsim::BuiltScene scene = fricsim::build_scene(config);
  std::optional<std::filesystem::path> out;
  if (!out_dir.empty()) out = out_dir;
  const fricsim::RunSummary summary = fricsim::run_simulation(scene, config, out);
  std::printf("steps=%d samples=%zu snapshots=%d min_end_gap=%.6g max_kappa_retries=%d\n", summary.steps,
              summary.trajectory.samples.size(), summary.snapshots, summary.min_end_gap,
              summary.max_kappa_retries);
  if (!out) std::fputs(fricsim::format_csv(summary.trajectory).c_str(), stdout);
  return 0;
}

int block_slide(const std::string& out_dir, int threads, bool quick) {
  std::vector<fricsim::BlockSlideVariant> variants;
  if (quick) {
    fricsim::BlockSlideVariant v;
    variants.push_back(v);
  } else {
    variants = fricsim::block_slide_matrix();
  }
  const auto results = fricsim::experiment_block_slide(variants, threads);
  const std::string report = fricsim::format_block_slide_report(results);
  std::fputs(report.c_str(), stdout);
  if (!out_dir.empty()) {
    std::string csv = "label,failed,stopped,stop_distance,stop_time,distance_error,time_error\n";
    char line[256];
    for (const auto& r : results) {
      std::snprintf(line, sizeof(line), "%s,%d,%d,%.17g,%.17g,%.17g,%.17g\n", r.variant.label().c_str(), r.failed,
                    r.stopped, r.stop_distance, r.stop_time, r.distance_error(), r.time_error());
      csv += line;
    }
    fricsim::write_text_file(std::filesystem::path(out_dir) / "block_slide.csv", csv);
    fricsim::write_text_file(std::filesystem::path(out_dir) / "block_slide.txt", report);
  }
  return 0;
}

int check_scene(const std::string& config_path) {
  const fricsim::SceneConfig config = fricsim::load_scene_file(config_path);
  std::fputs(fricsim::dump_scene(config).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalty-contact elastodynamics with implicit friction"};
  app.require_subcommand(1);
  std::string out_dir;
  int seed = 0;
  int threads = 1;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Reserved; simulations are deterministic");
  app.add_option("--threads", threads, "Worker threads for the block-slide matrix")->check(CLI::PositiveNumber);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a scene and export its trajectory");
  run->add_option("config", config_path, "Scene JSON")->required();
  bool quick = false;
  auto* slide = app.add_subcommand("block-slide", "Run the block-slide variant matrix");
  slide->add_flag("--quick", quick, "Only implicit BE at h = 0.01");
  auto* check = app.add_subcommand("check", "Validate a scene and print its normalized form");
  check->add_option("config", config_path, "Scene JSON")->required();
  for (auto* sub : {run, slide, check}) {
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Reserved; simulations are deterministic");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(fricsim::ErrorCategory::Config);
  }

  try {
    if (*run) return run_scene(config_path, out_dir);
    if (*slide) return block_slide(out_dir, threads, quick);
    if (*check) return check_scene(config_path);
  } catch (const fricsim::Error& e) {
    std::cerr << "error[" << fricsim::to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
