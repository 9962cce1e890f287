#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fedssta/frame.hpp"
#include "fedssta/rng.hpp"

namespace fedssta {

// One labeled training sample: sequence_length frames plus a one-hot label.
struct FrameSequence {
  std::vector<Frame> frames;
  std::vector<double> one_hot;

  std::size_t label() const;
  static std::vector<double> make_one_hot(std::size_t label, std::size_t classes);
};

struct SstaConfig {
  std::size_t frame_height = 16;
  std::size_t frame_width = 16;
  std::size_t conv_channels = 4;
  std::size_t kernel_size = 3;
  std::size_t attention_dim = 8;
  std::size_t fc_dim = 16;
  std::size_t ssa_stages = 2;
  std::size_t sequence_length = 5;  // frames per sample
  std::size_t conv1d_channels = 8;
  std::size_t conv1d_kernel = 3;
  std::size_t lstm_hidden = 16;
  std::size_t classes = 2;

  void validate() const;
  // spatial dims of the input map at stage s (stage 0 is the frame itself;
  // later stages see the previous fc vector reshaped near-square)
  void stage_dims(std::size_t s, std::size_t& h, std::size_t& w) const;
  std::size_t param_count() const;
};

// Per-frame processing stage: Conv2D (same padding, ReLU) -> SSA -> FC.
// All inputs are single-channel maps.
struct StageParams {
  std::vector<double> bank;     // conv_channels x kernel x kernel
  std::vector<double> omega_f;  // attention_dim x conv_channels
  std::vector<double> omega_g;  // attention_dim x conv_channels
  std::vector<double> omega_h;  // attention_dim x conv_channels
  std::vector<double> omega_v;  // conv_channels x attention_dim
  std::vector<double> fc;       // fc_dim x (conv_channels * P)
};

struct SstaParams {
  SstaConfig cfg;
  std::vector<StageParams> stages;
  std::vector<double> conv1d;  // conv1d_channels x fc_dim x conv1d_kernel
  std::vector<double> phi_as, phi_ah;  // lstm_hidden x conv1d_channels / x lstm_hidden
  std::vector<double> phi_bs, phi_bh;
  std::vector<double> phi_cs, phi_ch;
  std::vector<double> head;  // classes x lstm_hidden

  static SstaParams zeros(const SstaConfig& cfg);
  // uniform(-s, s), s = sqrt(3/fan_in) per block (variance 1/fan_in)
  static SstaParams init(const SstaConfig& cfg, Rng rng);

  std::vector<double> flatten() const;
  static SstaParams unflatten(const SstaConfig& cfg, const std::vector<double>& flat);

  // named views over every parameter block, in canonical flatten order
  struct BlockRef {
    std::string name;
    std::vector<double>* data;
  };
  std::vector<BlockRef> blocks();
};

// ---- individual ops (unit-testable pieces of the forward pass) ----

// same-padding stride-1 cross-correlation of a single-channel map with
// out_ch kernels, followed by the given activation
enum class Activation { relu, none };
void conv2d_forward(const double* in, std::size_t h, std::size_t w,
                    const double* bank, std::size_t out_ch, std::size_t k,
                    Activation act, double* out);

// Self-attention over a conv_channels x P activation map (P spatial
// positions). Returns the attended map, same shape as the input.
struct SsaCache {
  std::vector<double> f, g, h;  // attention_dim x P
  std::vector<double> scores;  // P x P
  std::vector<double> gamma;   // P x P, row-stochastic
  std::vector<double> attended;  // attention_dim x P
};
void ssa_forward(const double* act_map, std::size_t channels, std::size_t p,
                 const double* omega_f, const double* omega_g,
                 const double* omega_h, const double* omega_v,
                 std::size_t attention_dim, double* out, SsaCache* cache);

// Stacks per-frame feature vectors into the (l+1) x fc_dim features table.
std::vector<double> build_features_table(
    const std::vector<std::vector<double>>& frame_features, std::size_t fc_dim);

// LSTM over the conv1d output rows; returns the hidden state after the last
// step. Cell state accumulates additively (no forget gate).
struct LstmCache {
  std::vector<double> x;       // K x input_dim
  std::vector<double> h_in;    // K x hidden
  std::vector<double> a, b, c; // K x hidden (post-activation gates)
  std::vector<double> cell;    // K x hidden (cell after each step)
};
void lstm_forward(const double* x_seq, std::size_t steps, std::size_t input_dim,
                  const double* phi_as, const double* phi_ah,
                  const double* phi_bs, const double* phi_bh,
                  const double* phi_cs, const double* phi_ch,
                  std::size_t hidden, double* h_final, LstmCache* cache);

// ---- full model ----

struct StageActs {
  std::vector<double> input;    // h*w map fed to the stage
  std::vector<double> pre_act;  // conv output before ReLU
  std::vector<double> act;      // conv_channels x P, after ReLU
  SsaCache ssa;
  std::vector<double> attended_out;  // conv_channels x P (after omega_v)
  std::vector<double> vec;           // fc_dim
};

struct SstaActivations {
  std::vector<std::vector<StageActs>> frames;  // [frame][stage]
  std::vector<double> table;     // K x fc_dim
  std::vector<double> conv1d_out;  // K x conv1d_channels
  LstmCache lstm;
  std::vector<double> h_final;
  std::vector<double> logits;
  std::vector<double> yhat;
};

// forward() returns the class distribution; pass acts to keep what backward
// needs.
std::vector<double> forward(const SstaParams& params, const FrameSequence& seq,
                            SstaActivations* acts = nullptr);

// categorical cross-entropy, summed over the batch, probabilities clamped at
// 1e-12 before the log
double loss(const std::vector<double>& yhat, const std::vector<double>& one_hot);
double batch_loss(const SstaParams& params, const std::vector<const FrameSequence*>& batch);

// Accumulates dL/dparams for one sample into grad (same shapes as params).
void backward(const SstaParams& params, const SstaActivations& acts,
              const FrameSequence& seq, SstaParams& grad);

// Convenience: loss and full gradient over a batch (summed).
double loss_and_grad(const SstaParams& params,
                     const std::vector<const FrameSequence*>& batch,
                     SstaParams& grad);

// w <- w - mu * g, in place. Throws on non-finite gradient entries.
void sgd_step(SstaParams& params, const SstaParams& grad, double mu);
void sgd_step(std::vector<double>& w, const std::vector<double>& g, double mu);

}  // namespace fedssta
