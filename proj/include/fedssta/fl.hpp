#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "fedssta/metrics.hpp"
#include "fedssta/rng.hpp"
#include "fedssta/ssta.hpp"

namespace fedssta {

enum class StrategyKind { gsc, fedavg, fedprox };

std::string strategy_name(StrategyKind k);
StrategyKind strategy_from_name(const std::string& name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::gsc;
  double theta = 0.0;  // average-similarity threshold
  double tau = 1.0;    // softmax temperature for aggregation weights
  double prox_coefficient = 0.01;
  bool fedavg_sample_weighted = false;

  void validate() const;
};

struct TrainingConfig {
  std::size_t local_epochs = 5;
  double learning_rate = 0.01;
  std::size_t batch_size = 4;

  void validate() const;
};

// What an operator uploads after local training.
struct ModelUpdate {
  int operator_id = 0;
  std::vector<double> weights;
  std::size_t sample_count = 0;
  double train_loss = 0.0;      // mean per-sample loss over the last epoch
  double train_accuracy = 0.0;  // fraction correct over the last epoch
};

// Pairwise gradient similarity and the aggregation weights derived from it.
struct SimilarityReport {
  std::size_t count = 0;
  std::vector<double> matrix;  // count x count pairwise cosine
  std::vector<double> avg;     // row means, self term included
  std::vector<std::uint8_t> valid;  // avg >= theta
  std::vector<double> delta;   // softmax(avg/tau) over the valid set, 0 outside
  bool none_valid = false;

  std::uint64_t valid_bitmask() const;
};

// (w_new - w_prev) / mu: the accumulated negative gradient direction the
// server reconstructs from an uploaded model.
std::vector<double> recover_gradient(const std::vector<double>& w_new,
                                     const std::vector<double>& w_prev, double mu);

SimilarityReport gsc_weights(const std::vector<std::vector<double>>& grads,
                             double theta, double tau);

// Weighted sum of operator weights. delta entries must be >= 0; operators
// with delta 0 contribute nothing.
std::vector<double> aggregate(const std::vector<ModelUpdate>& updates,
                              const std::vector<double>& delta);

// One operator's local shard, pre-split.
struct OperatorData {
  int id = 0;
  std::vector<const FrameSequence*> train;
  std::vector<const FrameSequence*> val;
};

// Runs local_epochs of mini-batch SGD from w_global and returns the trained
// weights. FedProx adds prox_coefficient * (w - w_global) to each step's
// gradient. Batch order comes from batch_rng only.
ModelUpdate local_train(const SstaConfig& model, const OperatorData& op,
                        const std::vector<double>& w_global,
                        const TrainingConfig& training,
                        const StrategyConfig& strategy, Rng batch_rng);

struct EvalResult {
  double loss_sum = 0.0;
  ConfusionMatrix cm;
};

EvalResult evaluate(const SstaConfig& model, const std::vector<double>& weights,
                    const std::vector<const FrameSequence*>& samples);

struct RoundLog {
  std::size_t round = 0;  // 1-based
  bool stalled = false;
  std::vector<double> op_train_loss;
  std::vector<double> op_train_acc;
  SimilarityReport report;
  double global_train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double val_precision = 0.0;
  double val_recall = 0.0;
};

// One federated round over the given operators, in place on w_global.
// Returns the log entry; on an empty valid set the previous weights are kept
// and the round is marked stalled.
RoundLog run_round(const SstaConfig& model, std::vector<double>& w_global,
                   const std::vector<OperatorData>& operators,
                   const TrainingConfig& training, const StrategyConfig& strategy,
                   std::size_t round, const Rng& master, std::size_t workers = 1);

}  // namespace fedssta
