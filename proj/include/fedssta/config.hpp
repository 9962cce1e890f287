#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedssta/fl.hpp"
#include "fedssta/ssta.hpp"
#include "fedssta/synth.hpp"

namespace fedssta {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t rounds = 10;
  std::size_t workers = 1;
  SstaConfig model;
  ScenarioConfig scenario;
  TrainingConfig training;
  StrategyConfig strategy;
  bool export_dataset = false;
  std::string dataset_dir;  // when set, import instead of generating

  void validate() const;
};

// One experiment expanded from a config file; name is empty for a single
// run, otherwise the sweep subdirectory ("T5_gsc", ...).
struct ExpandedRun {
  std::string name;
  ExperimentConfig config;
};

// Strict parse: unknown keys are errors, malformed JSON reports the line.
// "scenario.operators", "training.local_epochs" and "strategy.kind" may be
// arrays, in which case the cross product of runs is returned.
std::vector<ExpandedRun> parse_experiment_file(const std::filesystem::path& path);
std::vector<ExpandedRun> parse_experiment_json(const std::string& text,
                                               const std::string& origin);

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

nlohmann::json model_config_to_json(const SstaConfig& cfg);
SstaConfig model_config_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace fedssta
