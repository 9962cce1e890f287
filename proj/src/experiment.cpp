#include "fedssta/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fedssta/checkpoint.hpp"
#include "fedssta/metrics.hpp"
#include "fedssta/textio.hpp"

namespace fedssta {

namespace {

ShardMetrics shard_metrics(const EvalResult& ev) {
  ShardMetrics m;
  m.samples = ev.cm.total();
  m.accuracy = accuracy(ev.cm);
  m.precision = precision(ev.cm).value;
  m.recall = recall(ev.cm).value;
  return m;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress,
                                std::optional<std::filesystem::path> export_dir) {
  cfg.validate();
  Rng master(cfg.seed);

  SynthDataset ds = cfg.dataset_dir.empty()
                        ? generate_dataset(cfg.scenario, cfg.model, master)
                        : import_dataset(cfg.dataset_dir, cfg.model);
  if (export_dir) export_dataset(*export_dir, ds);

  // per-operator 80/20 split (validation_fraction of each operator's shard)
  const std::size_t T = cfg.scenario.operators;
  std::vector<OperatorData> operators(T);
  for (std::size_t t = 0; t < T; ++t) operators[t].id = static_cast<int>(t + 1);
  {
    std::vector<std::vector<std::size_t>> shard_of(T);
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
      int op = ds.train_meta[i].operator_id;
      if (op < 1 || static_cast<std::size_t>(op) > T) {
        throw std::runtime_error("experiment: sample assigned to unknown operator " +
                                 std::to_string(op));
      }
      shard_of[static_cast<std::size_t>(op - 1)].push_back(i);
    }
    for (std::size_t t = 0; t < T; ++t) {
      auto& idx = shard_of[t];
      Rng split_rng = master.child("split", t + 1);
      split_rng.shuffle(idx);
      auto n_val = static_cast<std::size_t>(
          std::floor(cfg.scenario.validation_fraction * static_cast<double>(idx.size())));
      if (n_val >= idx.size() && !idx.empty()) n_val = idx.size() - 1;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const FrameSequence* s = &ds.train[idx[i]];
        if (i < n_val) operators[t].val.push_back(s);
        else operators[t].train.push_back(s);
      }
      if (operators[t].train.empty()) {
        throw std::runtime_error("experiment: operator " + std::to_string(t + 1) +
                                 " has no training samples after the split");
      }
    }
  }

  std::vector<const FrameSequence*> pooled_train, pooled_val;
  for (const OperatorData& op : operators) {
    pooled_train.insert(pooled_train.end(), op.train.begin(), op.train.end());
    pooled_val.insert(pooled_val.end(), op.val.begin(), op.val.end());
  }

  ExperimentResult res;
  res.config = cfg;

  std::vector<double> w_global = SstaParams::init(cfg.model, master.child("init")).flatten();

  for (std::size_t r = 1; r <= cfg.rounds; ++r) {
    RoundLog log = run_round(cfg.model, w_global, operators, cfg.training, cfg.strategy, r,
                             master, cfg.workers);
    EvalResult train_ev = evaluate(cfg.model, w_global, pooled_train);
    log.global_train_accuracy = accuracy(train_ev.cm);
    if (!pooled_val.empty()) {
      EvalResult val_ev = evaluate(cfg.model, w_global, pooled_val);
      log.val_accuracy = accuracy(val_ev.cm);
      log.val_precision = precision(val_ev.cm).value;
      log.val_recall = recall(val_ev.cm).value;
    }
    if (log.stalled) ++res.stalled_rounds;
    if (progress) progress(log);
    res.rounds.push_back(std::move(log));
  }

  res.final_weights = w_global;

  if (!pooled_val.empty()) {
    res.final_val = shard_metrics(evaluate(cfg.model, w_global, pooled_val));
  }

  auto eval_shard = [&](const std::vector<FrameSequence>& seqs) {
    std::vector<const FrameSequence*> ptrs;
    ptrs.reserve(seqs.size());
    for (const FrameSequence& s : seqs) ptrs.push_back(&s);
    return evaluate(cfg.model, w_global, ptrs);
  };

  SstaParams final_params = SstaParams::unflatten(cfg.model, w_global);
  auto per_participant = [&](const std::vector<FrameSequence>& seqs,
                             const std::vector<SequenceMeta>& meta, const char* shard) {
    std::map<std::size_t, ParticipantReport> by_p;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      ParticipantReport& rep = by_p[meta[i].participant];
      rep.participant = meta[i].participant;
      rep.shard = shard;
      ++rep.samples;
      std::vector<double> yhat = forward(final_params, seqs[i]);
      std::size_t pred = static_cast<std::size_t>(
          std::max_element(yhat.begin(), yhat.end()) - yhat.begin());
      if (pred == seqs[i].label()) ++rep.correct;
    }
    for (auto& [pid, rep] : by_p) {
      rep.accuracy = rep.samples ? static_cast<double>(rep.correct) / static_cast<double>(rep.samples) : 0.0;
      res.participant_reports.push_back(rep);
    }
  };

  if (!ds.test_trained.empty() || !ds.test_untrained.empty()) {
    EvalResult trained_ev = eval_shard(ds.test_trained);
    EvalResult untrained_ev = eval_shard(ds.test_untrained);
    EvalResult overall{.loss_sum = trained_ev.loss_sum + untrained_ev.loss_sum,
                       .cm = ConfusionMatrix(cfg.model.classes)};
    for (std::size_t i = 0; i < overall.cm.counts.size(); ++i) {
      overall.cm.counts[i] = trained_ev.cm.counts[i] + untrained_ev.cm.counts[i];
    }
    if (trained_ev.cm.total() > 0) res.final_test_trained = shard_metrics(trained_ev);
    if (untrained_ev.cm.total() > 0) res.final_test_untrained = shard_metrics(untrained_ev);
    if (overall.cm.total() > 0) res.final_test_overall = shard_metrics(overall);
    per_participant(ds.test_trained, ds.test_trained_meta, "trained");
    per_participant(ds.test_untrained, ds.test_untrained_meta, "untrained");
  }

  return res;
}

std::string rounds_csv(const ExperimentResult& res) {
  const std::size_t T = res.config.scenario.operators;
  std::vector<std::string> header{"round", "stalled"};
  for (std::size_t t = 1; t <= T; ++t) header.push_back("op" + std::to_string(t) + "_train_loss");
  for (std::size_t t = 1; t <= T; ++t) header.push_back("op" + std::to_string(t) + "_train_acc");
  for (std::size_t t = 1; t <= T; ++t) header.push_back("avg_sim_op" + std::to_string(t));
  header.push_back("valid_bitmask");
  for (std::size_t t = 1; t <= T; ++t) header.push_back("delta_op" + std::to_string(t));
  header.push_back("global_train_acc");
  header.push_back("val_accuracy");
  header.push_back("val_precision");
  header.push_back("val_recall");

  std::string out = join_csv(header) + "\n";
  for (const RoundLog& log : res.rounds) {
    std::vector<std::string> row;
    row.push_back(std::to_string(log.round));
    row.push_back(log.stalled ? "1" : "0");
    for (double v : log.op_train_loss) row.push_back(format_g17(v));
    for (double v : log.op_train_acc) row.push_back(format_g17(v));
    for (double v : log.report.avg) row.push_back(format_g17(v));
    row.push_back(std::to_string(log.report.valid_bitmask()));
    for (double v : log.report.delta) row.push_back(format_g17(v));
    row.push_back(format_g17(log.global_train_accuracy));
    row.push_back(format_g17(log.val_accuracy));
    row.push_back(format_g17(log.val_precision));
    row.push_back(format_g17(log.val_recall));
    out += join_csv(row) + "\n";
  }
  return out;
}

namespace {

nlohmann::json shard_json(const ShardMetrics& m) {
  return {{"samples", m.samples},
          {"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall}};
}

}  // namespace

std::string summary_json(const ExperimentResult& res) {
  nlohmann::json j;
  j["config"] = experiment_config_to_json(res.config);
  j["rounds_completed"] = res.rounds.size();
  j["stalled_rounds"] = res.stalled_rounds;
  j["final"] = {{"validation", shard_json(res.final_val)},
                {"test_overall", shard_json(res.final_test_overall)},
                {"test_trained", shard_json(res.final_test_trained)},
                {"test_untrained", shard_json(res.final_test_untrained)}};
  if (!res.rounds.empty()) {
    j["final"]["last_round_val_accuracy"] = res.rounds.back().val_accuracy;
  }
  return j.dump(2) + "\n";
}

std::string report_csv(const ExperimentResult& res) {
  std::string out = "participant,shard,samples,correct,accuracy\n";
  for (const ParticipantReport& rep : res.participant_reports) {
    out += std::to_string(rep.participant) + "," + rep.shard + "," +
           std::to_string(rep.samples) + "," + std::to_string(rep.correct) + "," +
           format_g17(rep.accuracy) + "\n";
  }
  return out;
}

void write_experiment_outputs(const std::filesystem::path& out_dir,
                              const ExperimentResult& res) {
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "rounds.csv", rounds_csv(res));
  write_text_file(out_dir / "summary.json", summary_json(res));
  write_text_file(out_dir / "report.csv", report_csv(res));
  SstaParams params = SstaParams::unflatten(res.config.model, res.final_weights);
  save_checkpoint(out_dir / "checkpoint.json", params);
}

}  // namespace fedssta
