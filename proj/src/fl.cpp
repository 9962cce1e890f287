#include "fedssta/fl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "fedssta/tensor.hpp"

namespace fedssta {

std::string strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::gsc: return "gsc";
    case StrategyKind::fedavg: return "fedavg";
    case StrategyKind::fedprox: return "fedprox";
  }
  return "?";
}

StrategyKind strategy_from_name(const std::string& name) {
  if (name == "gsc") return StrategyKind::gsc;
  if (name == "fedavg") return StrategyKind::fedavg;
  if (name == "fedprox") return StrategyKind::fedprox;
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected gsc, fedavg or fedprox)");
}

void StrategyConfig::validate() const {
  if (theta < -1.0 || theta > 1.0) {
    throw std::invalid_argument("strategy: theta must be in [-1, 1], got " +
                                std::to_string(theta));
  }
  if (tau <= 0.0) {
    throw std::invalid_argument("strategy: tau must be > 0, got " + std::to_string(tau));
  }
  if (prox_coefficient < 0.0) {
    throw std::invalid_argument("strategy: prox_coefficient must be >= 0");
  }
}

void TrainingConfig::validate() const {
  if (local_epochs == 0) throw std::invalid_argument("training: local_epochs must be >= 1");
  if (learning_rate < 0.0) throw std::invalid_argument("training: learning_rate must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("training: batch_size must be >= 1");
}

std::uint64_t SimilarityReport::valid_bitmask() const {
  std::uint64_t mask = 0;
  for (std::size_t t = 0; t < valid.size(); ++t) {
    if (valid[t]) mask |= (1ULL << t);
  }
  return mask;
}

std::vector<double> recover_gradient(const std::vector<double>& w_new,
                                     const std::vector<double>& w_prev, double mu) {
  if (w_new.size() != w_prev.size()) {
    throw std::invalid_argument("recover_gradient: weight length mismatch, " +
                                std::to_string(w_new.size()) + " vs " +
                                std::to_string(w_prev.size()));
  }
  if (mu <= 0.0) throw std::invalid_argument("recover_gradient: mu must be > 0");
  std::vector<double> g(w_new.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (w_new[i] - w_prev[i]) / mu;
  return g;
}

SimilarityReport gsc_weights(const std::vector<std::vector<double>>& grads,
                             double theta, double tau) {
  if (grads.empty()) throw std::invalid_argument("gsc_weights: no gradients");
  if (tau <= 0.0) throw std::invalid_argument("gsc_weights: tau must be > 0");
  const std::size_t T = grads.size();
  for (std::size_t t = 1; t < T; ++t) {
    if (grads[t].size() != grads[0].size()) {
      throw std::invalid_argument("gsc_weights: gradient " + std::to_string(t) +
                                  " has length " + std::to_string(grads[t].size()) +
                                  ", expected " + std::to_string(grads[0].size()));
    }
  }

  SimilarityReport rep;
  rep.count = T;
  rep.matrix.assign(T * T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double n2 = 0.0;
    for (double v : grads[t]) n2 += v * v;
    // self term is 1 by definition, 0 for a degenerate gradient
    rep.matrix[t * T + t] = std::sqrt(n2) < 1e-12 ? 0.0 : 1.0;
    for (std::size_t u = t + 1; u < T; ++u) {
      double c = cosine(std::span<const double>(grads[t]), std::span<const double>(grads[u]));
      rep.matrix[t * T + u] = c;
      rep.matrix[u * T + t] = c;
    }
  }

  rep.avg.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double s = 0.0;
    for (std::size_t u = 0; u < T; ++u) s += rep.matrix[t * T + u];
    rep.avg[t] = s / static_cast<double>(T);
  }

  rep.valid.assign(T, 0);
  std::vector<std::size_t> members;
  for (std::size_t t = 0; t < T; ++t) {
    if (rep.avg[t] >= theta) {
      rep.valid[t] = 1;
      members.push_back(t);
    }
  }

  rep.delta.assign(T, 0.0);
  if (members.empty()) {
    rep.none_valid = true;
    return rep;
  }
  std::vector<double> vals(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) vals[i] = rep.avg[members[i]];
  std::vector<double> soft = softmax(std::span<const double>(vals), tau);
  for (std::size_t i = 0; i < members.size(); ++i) rep.delta[members[i]] = soft[i];
  return rep;
}

std::vector<double> aggregate(const std::vector<ModelUpdate>& updates,
                              const std::vector<double>& delta) {
  if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
  if (updates.size() != delta.size()) {
    throw std::invalid_argument("aggregate: " + std::to_string(updates.size()) +
                                " updates but " + std::to_string(delta.size()) + " weights");
  }
  const std::size_t n = updates[0].weights.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < updates.size(); ++t) {
    if (updates[t].weights.size() != n) {
      throw std::invalid_argument("aggregate: update " + std::to_string(t) +
                                  " has mismatched weight length");
    }
    if (delta[t] < 0.0) throw std::invalid_argument("aggregate: negative delta");
    if (delta[t] == 0.0) continue;
    const double d = delta[t];
    const double* w = updates[t].weights.data();
    for (std::size_t i = 0; i < n; ++i) out[i] += d * w[i];
  }
  return out;
}

ModelUpdate local_train(const SstaConfig& model, const OperatorData& op,
                        const std::vector<double>& w_global,
                        const TrainingConfig& training,
                        const StrategyConfig& strategy, Rng batch_rng) {
  training.validate();
  strategy.validate();
  if (op.train.empty()) {
    throw std::invalid_argument("local_train: operator " + std::to_string(op.id) +
                                " has no training samples");
  }
  SstaParams params = SstaParams::unflatten(model, w_global);
  const bool prox = strategy.kind == StrategyKind::fedprox;
  const double rho = strategy.prox_coefficient;

  std::vector<std::size_t> order(op.train.size());
  std::iota(order.begin(), order.end(), 0);

  double last_epoch_loss = 0.0;
  std::size_t last_epoch_correct = 0;
  SstaActivations acts;

  for (std::size_t epoch = 0; epoch < training.local_epochs; ++epoch) {
    batch_rng.shuffle(order);
    bool last = (epoch + 1 == training.local_epochs);
    if (last) {
      last_epoch_loss = 0.0;
      last_epoch_correct = 0;
    }
    for (std::size_t start = 0; start < order.size(); start += training.batch_size) {
      std::size_t end = std::min(order.size(), start + training.batch_size);
      SstaParams grad = SstaParams::zeros(model);
      double batch_loss_sum = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const FrameSequence& s = *op.train[order[i]];
        std::vector<double> yhat = forward(params, s, &acts);
        batch_loss_sum += loss(yhat, s.one_hot);
        backward(params, acts, s, grad);
        if (last) {
          std::size_t pred = static_cast<std::size_t>(
              std::max_element(yhat.begin(), yhat.end()) - yhat.begin());
          if (pred == s.label()) ++last_epoch_correct;
        }
      }
      if (!std::isfinite(batch_loss_sum)) {
        throw std::runtime_error("local_train: non-finite loss for operator " +
                                 std::to_string(op.id) + " at batch starting " +
                                 std::to_string(start));
      }
      if (last) last_epoch_loss += batch_loss_sum;

      std::vector<double> g = grad.flatten();
      if (prox) {
        std::vector<double> w_cur = params.flatten();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += rho * (w_cur[i] - w_global[i]);
        sgd_step(w_cur, g, training.learning_rate);
        params = SstaParams::unflatten(model, w_cur);
      } else {
        sgd_step(params, grad, training.learning_rate);
      }
    }
  }

  ModelUpdate up;
  up.operator_id = op.id;
  up.weights = params.flatten();
  up.sample_count = op.train.size();
  up.train_loss = last_epoch_loss / static_cast<double>(op.train.size());
  up.train_accuracy =
      static_cast<double>(last_epoch_correct) / static_cast<double>(op.train.size());
  return up;
}

EvalResult evaluate(const SstaConfig& model, const std::vector<double>& weights,
                    const std::vector<const FrameSequence*>& samples) {
  SstaParams params = SstaParams::unflatten(model, weights);
  EvalResult res{0.0, ConfusionMatrix(model.classes)};
  for (const FrameSequence* s : samples) {
    std::vector<double> yhat = forward(params, *s);
    res.loss_sum += loss(yhat, s->one_hot);
    std::size_t pred = static_cast<std::size_t>(
        std::max_element(yhat.begin(), yhat.end()) - yhat.begin());
    res.cm.add(s->label(), pred);
  }
  return res;
}

RoundLog run_round(const SstaConfig& model, std::vector<double>& w_global,
                   const std::vector<OperatorData>& operators,
                   const TrainingConfig& training, const StrategyConfig& strategy,
                   std::size_t round, const Rng& master, std::size_t workers) {
  if (operators.empty()) throw std::invalid_argument("run_round: no operators");
  const std::size_t T = operators.size();

  std::vector<ModelUpdate> updates(T);
  auto train_one = [&](std::size_t idx) {
    const OperatorData& op = operators[idx];
    updates[idx] = local_train(model, op, w_global, training, strategy,
                               master.child("batch", static_cast<std::uint64_t>(op.id), round));
  };
  if (workers <= 1 || T == 1) {
    for (std::size_t t = 0; t < T; ++t) train_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::size_t n_threads = std::min(workers, T);
    pool.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t idx = next.fetch_add(1);
          if (idx >= T) return;
          train_one(idx);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  std::vector<std::vector<double>> grads(T);
  for (std::size_t t = 0; t < T; ++t) {
    grads[t] = recover_gradient(updates[t].weights, w_global, training.learning_rate);
  }

  RoundLog log;
  log.round = round;
  log.report = gsc_weights(grads, strategy.theta, strategy.tau);
  for (std::size_t t = 0; t < T; ++t) {
    log.op_train_loss.push_back(updates[t].train_loss);
    log.op_train_acc.push_back(updates[t].train_accuracy);
  }

  std::vector<double> delta(T, 0.0);
  switch (strategy.kind) {
    case StrategyKind::gsc:
      if (log.report.none_valid) {
        log.stalled = true;  // keep previous global weights
        log.report.delta.assign(T, 0.0);
        return log;
      }
      delta = log.report.delta;
      break;
    case StrategyKind::fedavg:
    case StrategyKind::fedprox: {
      if (strategy.kind == StrategyKind::fedavg && strategy.fedavg_sample_weighted) {
        double total = 0.0;
        for (const ModelUpdate& u : updates) total += static_cast<double>(u.sample_count);
        for (std::size_t t = 0; t < T; ++t)
          delta[t] = static_cast<double>(updates[t].sample_count) / total;
      } else {
        delta.assign(T, 1.0 / static_cast<double>(T));
      }
      // the report keeps the GSC diagnostic; delta reflects what was used
      log.report.delta = delta;
      break;
    }
  }

  w_global = aggregate(updates, delta);
  return log;
}

}  // namespace fedssta
