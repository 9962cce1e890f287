#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "fedssta/config.hpp"
#include "fedssta/fl.hpp"
#include "fedssta/synth.hpp"

namespace fedssta {

struct ShardMetrics {
  std::size_t samples = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct ParticipantReport {
  std::size_t participant = 0;
  std::string shard;  // "trained" or "untrained"
  std::size_t samples = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RoundLog> rounds;
  std::size_t stalled_rounds = 0;
  ShardMetrics final_val;
  ShardMetrics final_test_overall;
  ShardMetrics final_test_trained;
  ShardMetrics final_test_untrained;
  std::vector<ParticipantReport> participant_reports;
  std::vector<double> final_weights;
};

using ProgressFn = std::function<void(const RoundLog&)>;

// Full simulation: dataset build (or import), per-operator 80/20 split,
// round loop, final evaluation on the test shards.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const ProgressFn& progress = nullptr,
                                std::optional<std::filesystem::path> export_dir = std::nullopt);

std::string rounds_csv(const ExperimentResult& res);
std::string summary_json(const ExperimentResult& res);
std::string report_csv(const ExperimentResult& res);

// rounds.csv, summary.json, report.csv, checkpoint.json under out_dir
void write_experiment_outputs(const std::filesystem::path& out_dir,
                              const ExperimentResult& res);

}  // namespace fedssta
