#include "fedssta/config.hpp"

#include <algorithm>
#include <stdexcept>

#include "fedssta/textio.hpp"

namespace fedssta {

using nlohmann::json;

void ExperimentConfig::validate() const {
  model.validate();
  scenario.validate();
  training.validate();
  strategy.validate();
  if (workers == 0) throw std::invalid_argument("config: workers must be >= 1");
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw std::invalid_argument("config " + where + ": " + msg);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      fail(where, "unknown key '" + key + "'");
    }
  }
}

std::size_t get_size(const json& j, const std::string& where, const char* key,
                     std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) {
    fail(where, std::string("'") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double get_double(const json& j, const std::string& where, const char* key,
                  double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) fail(where, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

bool get_bool(const json& j, const std::string& where, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(where, std::string("'") + key + "' must be a boolean");
  return v.get<bool>();
}

}  // namespace

json model_config_to_json(const SstaConfig& c) {
  return json{{"frame_height", c.frame_height},
              {"frame_width", c.frame_width},
              {"conv_channels", c.conv_channels},
              {"kernel_size", c.kernel_size},
              {"attention_dim", c.attention_dim},
              {"fc_dim", c.fc_dim},
              {"ssa_stages", c.ssa_stages},
              {"sequence_length", c.sequence_length},
              {"conv1d_channels", c.conv1d_channels},
              {"conv1d_kernel", c.conv1d_kernel},
              {"lstm_hidden", c.lstm_hidden},
              {"classes", c.classes}};
}

SstaConfig model_config_from_json(const json& j, const std::string& where) {
  check_keys(j, where,
             {"frame_height", "frame_width", "conv_channels", "kernel_size",
              "attention_dim", "fc_dim", "ssa_stages", "sequence_length",
              "conv1d_channels", "conv1d_kernel", "lstm_hidden", "classes"});
  SstaConfig c;
  c.frame_height = get_size(j, where, "frame_height", c.frame_height);
  c.frame_width = get_size(j, where, "frame_width", c.frame_width);
  c.conv_channels = get_size(j, where, "conv_channels", c.conv_channels);
  c.kernel_size = get_size(j, where, "kernel_size", c.kernel_size);
  c.attention_dim = get_size(j, where, "attention_dim", c.attention_dim);
  c.fc_dim = get_size(j, where, "fc_dim", c.fc_dim);
  c.ssa_stages = get_size(j, where, "ssa_stages", c.ssa_stages);
  c.sequence_length = get_size(j, where, "sequence_length", c.sequence_length);
  c.conv1d_channels = get_size(j, where, "conv1d_channels", c.conv1d_channels);
  c.conv1d_kernel = get_size(j, where, "conv1d_kernel", c.conv1d_kernel);
  c.lstm_hidden = get_size(j, where, "lstm_hidden", c.lstm_hidden);
  c.classes = get_size(j, where, "classes", c.classes);
  c.validate();
  return c;
}

namespace {

ScenarioConfig scenario_from_json(const json& j, std::size_t operators) {
  const std::string where = "scenario";
  check_keys(j, where,
             {"participants", "operators", "sequences_per_class",
              "test_trained_participants", "test_untrained_participants",
              "test_sequences_per_class", "noise_sigma", "heterogeneity",
              "corrupt_operators", "label_flip_probability", "validation_fraction"});
  ScenarioConfig c;
  c.participants = get_size(j, where, "participants", c.participants);
  c.operators = operators;
  c.sequences_per_class = get_size(j, where, "sequences_per_class", c.sequences_per_class);
  c.test_trained_participants =
      get_size(j, where, "test_trained_participants", c.test_trained_participants);
  c.test_untrained_participants =
      get_size(j, where, "test_untrained_participants", c.test_untrained_participants);
  c.test_sequences_per_class =
      get_size(j, where, "test_sequences_per_class", c.test_sequences_per_class);
  c.noise_sigma = get_double(j, where, "noise_sigma", c.noise_sigma);
  c.heterogeneity = get_double(j, where, "heterogeneity", c.heterogeneity);
  c.label_flip_probability =
      get_double(j, where, "label_flip_probability", c.label_flip_probability);
  c.validation_fraction = get_double(j, where, "validation_fraction", c.validation_fraction);
  if (j.contains("corrupt_operators")) {
    const json& arr = j.at("corrupt_operators");
    if (!arr.is_array()) fail(where, "'corrupt_operators' must be an array of operator ids");
    for (const json& v : arr) {
      if (!v.is_number_unsigned()) fail(where, "'corrupt_operators' entries must be positive integers");
      c.corrupt_operators.push_back(v.get<std::size_t>());
    }
  }
  return c;
}

TrainingConfig training_from_json(const json& j, std::size_t local_epochs) {
  const std::string where = "training";
  check_keys(j, where, {"local_epochs", "learning_rate", "batch_size"});
  TrainingConfig c;
  c.local_epochs = local_epochs;
  c.learning_rate = get_double(j, where, "learning_rate", c.learning_rate);
  c.batch_size = get_size(j, where, "batch_size", c.batch_size);
  return c;
}

StrategyConfig strategy_from_json(const json& j, StrategyKind kind) {
  const std::string where = "strategy";
  check_keys(j, where, {"kind", "theta", "tau", "prox_coefficient", "fedavg_sample_weighted"});
  StrategyConfig c;
  c.kind = kind;
  c.theta = get_double(j, where, "theta", c.theta);
  c.tau = get_double(j, where, "tau", c.tau);
  c.prox_coefficient = get_double(j, where, "prox_coefficient", c.prox_coefficient);
  c.fedavg_sample_weighted = get_bool(j, where, "fedavg_sample_weighted", c.fedavg_sample_weighted);
  return c;
}

// reads a scalar-or-array key into a list of values for sweep expansion
template <typename T, typename Check>
std::vector<T> sweep_values(const json& parent, const std::string& where, const char* key,
                            T fallback, Check check) {
  if (!parent.contains(key)) return {fallback};
  const json& v = parent.at(key);
  std::vector<T> out;
  if (v.is_array()) {
    if (v.empty()) fail(where, std::string("'") + key + "' sweep array is empty");
    for (const json& e : v) out.push_back(check(e));
  } else {
    out.push_back(check(v));
  }
  return out;
}

}  // namespace

std::vector<ExpandedRun> parse_experiment_json(const std::string& text,
                                               const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // translate byte offset into a line number
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw std::invalid_argument("config " + origin + " line " + std::to_string(line) +
                                ": " + e.what());
  }

  check_keys(j, origin,
             {"seed", "rounds", "workers", "model", "scenario", "training", "strategy",
              "export_dataset", "dataset_dir"});

  ExperimentConfig base;
  base.seed = get_size(j, origin, "seed", 1);
  base.rounds = get_size(j, origin, "rounds", base.rounds);
  base.workers = get_size(j, origin, "workers", base.workers);
  base.export_dataset = get_bool(j, origin, "export_dataset", false);
  if (j.contains("dataset_dir")) {
    if (!j.at("dataset_dir").is_string()) fail(origin, "'dataset_dir' must be a string");
    base.dataset_dir = j.at("dataset_dir").get<std::string>();
  }
  base.model = j.contains("model") ? model_config_from_json(j.at("model"), "model") : SstaConfig{};

  json scenario_j = j.contains("scenario") ? j.at("scenario") : json::object();
  json training_j = j.contains("training") ? j.at("training") : json::object();
  json strategy_j = j.contains("strategy") ? j.at("strategy") : json::object();

  auto as_size = [](const json& v) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
      throw std::invalid_argument("config: sweep values must be positive integers");
    }
    return v.get<std::size_t>();
  };
  auto as_kind = [](const json& v) {
    if (!v.is_string()) throw std::invalid_argument("config strategy: 'kind' must be a string");
    return strategy_from_name(v.get<std::string>());
  };

  std::vector<std::size_t> op_values =
      sweep_values<std::size_t>(scenario_j, "scenario", "operators", ScenarioConfig{}.operators, as_size);
  std::vector<std::size_t> epoch_values =
      sweep_values<std::size_t>(training_j, "training", "local_epochs", TrainingConfig{}.local_epochs, as_size);
  std::vector<StrategyKind> kind_values =
      sweep_values<StrategyKind>(strategy_j, "strategy", "kind", StrategyKind::gsc, as_kind);

  bool sweep_ops = op_values.size() > 1;
  bool sweep_epochs = epoch_values.size() > 1;
  bool sweep_kind = kind_values.size() > 1;

  std::vector<ExpandedRun> runs;
  for (std::size_t ops : op_values) {
    for (std::size_t epochs : epoch_values) {
      for (StrategyKind kind : kind_values) {
        ExperimentConfig cfg = base;
        cfg.scenario = scenario_from_json(scenario_j, ops);
        cfg.training = training_from_json(training_j, epochs);
        cfg.strategy = strategy_from_json(strategy_j, kind);
        cfg.validate();
        std::string name;
        if (sweep_ops) name += "T" + std::to_string(ops);
        if (sweep_epochs) name += (name.empty() ? "" : "_") + ("e" + std::to_string(epochs));
        if (sweep_kind) name += (name.empty() ? "" : "_") + strategy_name(kind);
        runs.push_back({name, cfg});
      }
    }
  }
  return runs;
}

std::vector<ExpandedRun> parse_experiment_file(const std::filesystem::path& path) {
  return parse_experiment_json(read_text_file(path), path.filename().string());
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["rounds"] = cfg.rounds;
  j["workers"] = cfg.workers;
  j["model"] = model_config_to_json(cfg.model);
  j["scenario"] = {{"participants", cfg.scenario.participants},
                   {"operators", cfg.scenario.operators},
                   {"sequences_per_class", cfg.scenario.sequences_per_class},
                   {"test_trained_participants", cfg.scenario.test_trained_participants},
                   {"test_untrained_participants", cfg.scenario.test_untrained_participants},
                   {"test_sequences_per_class", cfg.scenario.test_sequences_per_class},
                   {"noise_sigma", cfg.scenario.noise_sigma},
                   {"heterogeneity", cfg.scenario.heterogeneity},
                   {"corrupt_operators", cfg.scenario.corrupt_operators},
                   {"label_flip_probability", cfg.scenario.label_flip_probability},
                   {"validation_fraction", cfg.scenario.validation_fraction}};
  j["training"] = {{"local_epochs", cfg.training.local_epochs},
                   {"learning_rate", cfg.training.learning_rate},
                   {"batch_size", cfg.training.batch_size}};
  j["strategy"] = {{"kind", strategy_name(cfg.strategy.kind)},
                   {"theta", cfg.strategy.theta},
                   {"tau", cfg.strategy.tau},
                   {"prox_coefficient", cfg.strategy.prox_coefficient},
                   {"fedavg_sample_weighted", cfg.strategy.fedavg_sample_weighted}};
  j["export_dataset"] = cfg.export_dataset;
  if (!cfg.dataset_dir.empty()) j["dataset_dir"] = cfg.dataset_dir;
  return j;
}

}  // namespace fedssta
