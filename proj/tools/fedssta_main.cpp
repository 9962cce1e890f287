#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fedssta/compare.hpp"
#include "fedssta/config.hpp"
#include "fedssta/experiment.hpp"
#include "fedssta/prep.hpp"
#include "fedssta/textio.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, std::size_t workers) {
  std::vector<fedssta::ExpandedRun> runs = fedssta::parse_experiment_file(config_path);
  fs::path base_out = out_dir.empty() ? fs::path("out") : fs::path(out_dir);

  for (fedssta::ExpandedRun& run : runs) {
    if (workers > 0) run.config.workers = workers;
    fs::path dir = run.name.empty() ? base_out : base_out / run.name;
    std::optional<fs::path> export_dir;
    if (run.config.export_dataset) export_dir = dir / "dataset";

    std::fprintf(stderr, "run%s%s: %zu operators, %zu rounds, strategy %s\n",
                 run.name.empty() ? "" : " ", run.name.c_str(),
                 run.config.scenario.operators, run.config.rounds,
                 fedssta::strategy_name(run.config.strategy.kind).c_str());
    auto progress = [](const fedssta::RoundLog& log) {
      std::fprintf(stderr, "  round %zu: train_acc %.4f val_acc %.4f%s\n", log.round,
                   log.global_train_accuracy, log.val_accuracy,
                   log.stalled ? " (stalled)" : "");
    };
    fedssta::ExperimentResult res = fedssta::run_experiment(run.config, progress, export_dir);
    fedssta::write_experiment_outputs(dir, res);
    std::fprintf(stderr, "  wrote %s\n", dir.string().c_str());
  }
  return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out_file) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  fedssta::CompareWarnings warnings;
  std::string csv = fedssta::compare_runs(paths, &warnings);
  for (const std::string& w : warnings.messages) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  if (out_file.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    fedssta::write_text_file(out_file, csv);
    std::fprintf(stderr, "wrote %s\n", out_file.c_str());
  }
  return 0;
}

int cmd_prep(const std::string& in_dir, const std::string& hog_cfg,
             const std::string& augment_spec, const std::string& out_dir) {
  fedssta::PrepOptions opts;
  opts.in_dir = in_dir;
  opts.hog_config = hog_cfg;
  opts.augment_spec = augment_spec;
  opts.out_dir = out_dir;
  fedssta::PrepStats stats = fedssta::run_prep(opts);
  for (const std::string& w : stats.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  std::fprintf(stderr, "prep: %zu frames in, %zu skipped, %zu images out\n", stats.frames_in,
               stats.frames_skipped, stats.images_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated drowsiness-detection simulator"};
  app.require_subcommand(1);

  std::string config_path, run_out;
  std::size_t workers = 0;
  CLI::App* run = app.add_subcommand("run", "run experiments from a config file");
  run->add_option("--config", config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "worker threads for local training");
  run->add_option("--out", run_out, "output directory (default: out)");

  std::vector<std::string> compare_dirs;
  std::string compare_out;
  CLI::App* cmp = app.add_subcommand("compare", "compare finished run directories");
  cmp->add_option("dirs", compare_dirs, "run directories")->required()->expected(2, -1);
  cmp->add_option("--out", compare_out, "write the comparison CSV here instead of stdout");

  std::string prep_in, prep_hog, prep_augment, prep_out;
  CLI::App* prep = app.add_subcommand("prep", "crop/augment/HoG a directory of PGM frames");
  prep->add_option("--in", prep_in, "input directory of .pgm frames")->required();
  prep->add_option("--hog", prep_hog, "HoG config (JSON)")->check(CLI::ExistingFile);
  prep->add_option("--augment", prep_augment, "augmentation spec (JSON)")->check(CLI::ExistingFile);
  prep->add_option("--out", prep_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, run_out, workers);
    if (cmp->parsed()) return cmd_compare(compare_dirs, compare_out);
    if (prep->parsed()) return cmd_prep(prep_in, prep_hog, prep_augment, prep_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
