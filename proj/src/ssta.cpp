#include "fedssta/ssta.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedssta/tensor.hpp"

namespace fedssta {

std::size_t FrameSequence::label() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < one_hot.size(); ++i)
    if (one_hot[i] > one_hot[best]) best = i;
  return best;
}

std::vector<double> FrameSequence::make_one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes) {
    throw std::invalid_argument("one_hot: label " + std::to_string(label) +
                                " out of range for " + std::to_string(classes) + " classes");
  }
  std::vector<double> v(classes, 0.0);
  v[label] = 1.0;
  return v;
}

void SstaConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("ssta config: ") + msg);
  };
  need(frame_height >= 2 && frame_width >= 2, "frame must be at least 2x2");
  need(conv_channels >= 1, "conv_channels must be >= 1");
  need(kernel_size >= 1 && kernel_size % 2 == 1, "kernel_size must be odd");
  need(attention_dim >= 1, "attention_dim must be >= 1");
  need(fc_dim >= 2, "fc_dim must be >= 2");
  need(ssa_stages >= 1, "ssa_stages must be >= 1");
  need(sequence_length >= 2, "sequence_length must be >= 2");
  need(conv1d_channels >= 1, "conv1d_channels must be >= 1");
  need(conv1d_kernel >= 1 && conv1d_kernel % 2 == 1, "conv1d_kernel must be odd");
  need(lstm_hidden >= 1, "lstm_hidden must be >= 1");
  need(classes >= 2, "classes must be >= 2");
}

void SstaConfig::stage_dims(std::size_t s, std::size_t& h, std::size_t& w) const {
  if (s == 0) {
    h = frame_height;
    w = frame_width;
    return;
  }
  // largest divisor of fc_dim not above its square root
  std::size_t best = 1;
  for (std::size_t d = 1; d * d <= fc_dim; ++d)
    if (fc_dim % d == 0) best = d;
  h = best;
  w = fc_dim / best;
}

std::size_t SstaConfig::param_count() const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < ssa_stages; ++s) {
    std::size_t h, w;
    stage_dims(s, h, w);
    std::size_t p = h * w;
    n += conv_channels * kernel_size * kernel_size;
    n += 3 * attention_dim * conv_channels;
    n += conv_channels * attention_dim;
    n += fc_dim * conv_channels * p;
  }
  n += conv1d_channels * fc_dim * conv1d_kernel;
  n += 3 * (lstm_hidden * conv1d_channels + lstm_hidden * lstm_hidden);
  n += classes * lstm_hidden;
  return n;
}

SstaParams SstaParams::zeros(const SstaConfig& cfg) {
  cfg.validate();
  SstaParams p;
  p.cfg = cfg;
  p.stages.resize(cfg.ssa_stages);
  for (std::size_t s = 0; s < cfg.ssa_stages; ++s) {
    std::size_t h, w;
    cfg.stage_dims(s, h, w);
    std::size_t pp = h * w;
    StageParams& st = p.stages[s];
    st.bank.assign(cfg.conv_channels * cfg.kernel_size * cfg.kernel_size, 0.0);
    st.omega_f.assign(cfg.attention_dim * cfg.conv_channels, 0.0);
    st.omega_g.assign(cfg.attention_dim * cfg.conv_channels, 0.0);
    st.omega_h.assign(cfg.attention_dim * cfg.conv_channels, 0.0);
    st.omega_v.assign(cfg.conv_channels * cfg.attention_dim, 0.0);
    st.fc.assign(cfg.fc_dim * cfg.conv_channels * pp, 0.0);
  }
  p.conv1d.assign(cfg.conv1d_channels * cfg.fc_dim * cfg.conv1d_kernel, 0.0);
  p.phi_as.assign(cfg.lstm_hidden * cfg.conv1d_channels, 0.0);
  p.phi_ah.assign(cfg.lstm_hidden * cfg.lstm_hidden, 0.0);
  p.phi_bs = p.phi_as;
  p.phi_bh = p.phi_ah;
  p.phi_cs = p.phi_as;
  p.phi_ch = p.phi_ah;
  p.head.assign(cfg.classes * cfg.lstm_hidden, 0.0);
  return p;
}

std::vector<SstaParams::BlockRef> SstaParams::blocks() {
  std::vector<BlockRef> out;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    std::string tag = "stage" + std::to_string(s) + ".";
    out.push_back({tag + "bank", &stages[s].bank});
    out.push_back({tag + "omega_f", &stages[s].omega_f});
    out.push_back({tag + "omega_g", &stages[s].omega_g});
    out.push_back({tag + "omega_h", &stages[s].omega_h});
    out.push_back({tag + "omega_v", &stages[s].omega_v});
    out.push_back({tag + "fc", &stages[s].fc});
  }
  out.push_back({"conv1d", &conv1d});
  out.push_back({"phi_as", &phi_as});
  out.push_back({"phi_ah", &phi_ah});
  out.push_back({"phi_bs", &phi_bs});
  out.push_back({"phi_bh", &phi_bh});
  out.push_back({"phi_cs", &phi_cs});
  out.push_back({"phi_ch", &phi_ch});
  out.push_back({"head", &head});
  return out;
}

namespace {

std::size_t block_fan_in(const SstaConfig& cfg, const std::string& name) {
  if (name.find("bank") != std::string::npos) return cfg.kernel_size * cfg.kernel_size;
  if (name.find("omega_v") != std::string::npos) return cfg.attention_dim;
  if (name.find("omega_") != std::string::npos) return cfg.conv_channels;
  if (name.find(".fc") != std::string::npos) {
    // fc input length varies per stage; recover the stage index
    std::size_t s = name[5] - '0';
    std::size_t h, w;
    cfg.stage_dims(s, h, w);
    return cfg.conv_channels * h * w;
  }
  if (name == "conv1d") return cfg.fc_dim * cfg.conv1d_kernel;
  if (name == "phi_as" || name == "phi_bs" || name == "phi_cs") return cfg.conv1d_channels;
  if (name == "phi_ah" || name == "phi_bh" || name == "phi_ch") return cfg.lstm_hidden;
  if (name == "head") return cfg.lstm_hidden;
  throw std::logic_error("unknown block " + name);
}

}  // namespace

SstaParams SstaParams::init(const SstaConfig& cfg, Rng rng) {
  SstaParams p = zeros(cfg);
  for (BlockRef& b : p.blocks()) {
    double s = std::sqrt(3.0 / static_cast<double>(block_fan_in(cfg, b.name)));
    for (double& v : *b.data) v = rng.uniform(-s, s);
  }
  return p;
}

std::vector<double> SstaParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(cfg.param_count());
  auto& self = const_cast<SstaParams&>(*this);
  for (BlockRef& b : self.blocks()) flat.insert(flat.end(), b.data->begin(), b.data->end());
  return flat;
}

SstaParams SstaParams::unflatten(const SstaConfig& cfg, const std::vector<double>& flat) {
  SstaParams p = zeros(cfg);
  if (flat.size() != cfg.param_count()) {
    throw std::invalid_argument("unflatten: expected " + std::to_string(cfg.param_count()) +
                                " values, got " + std::to_string(flat.size()));
  }
  std::size_t off = 0;
  for (BlockRef& b : p.blocks()) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + b.data->size()),
              b.data->begin());
    off += b.data->size();
  }
  return p;
}

void conv2d_forward(const double* in, std::size_t h, std::size_t w,
                    const double* bank, std::size_t out_ch, std::size_t k,
                    Activation act, double* out) {
  const auto kc = static_cast<std::ptrdiff_t>(k / 2);
  const auto hh = static_cast<std::ptrdiff_t>(h);
  const auto ww = static_cast<std::ptrdiff_t>(w);
  for (std::size_t o = 0; o < out_ch; ++o) {
    const double* kern = bank + o * k * k;
    double* dst = out + o * h * w;
    for (std::ptrdiff_t y = 0; y < hh; ++y) {
      for (std::ptrdiff_t x = 0; x < ww; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t u = -kc; u <= kc; ++u) {
          std::ptrdiff_t yy = y + u;
          if (yy < 0 || yy >= hh) continue;
          const double* row = in + yy * ww;
          const double* krow = kern + (u + kc) * static_cast<std::ptrdiff_t>(k);
          for (std::ptrdiff_t v = -kc; v <= kc; ++v) {
            std::ptrdiff_t xx = x + v;
            if (xx < 0 || xx >= ww) continue;
            acc += krow[v + kc] * row[xx];
          }
        }
        if (act == Activation::relu && acc < 0.0) acc = 0.0;
        dst[y * ww + x] = acc;
      }
    }
  }
}

void ssa_forward(const double* act_map, std::size_t channels, std::size_t p,
                 const double* omega_f, const double* omega_g,
                 const double* omega_h, const double* omega_v,
                 std::size_t attention_dim, double* out, SsaCache* cache) {
  SsaCache local;
  SsaCache& c = cache ? *cache : local;
  c.f.assign(attention_dim * p, 0.0);
  c.g.assign(attention_dim * p, 0.0);
  c.h.assign(attention_dim * p, 0.0);
  c.scores.assign(p * p, 0.0);
  c.gamma.assign(p * p, 0.0);
  c.attended.assign(attention_dim * p, 0.0);

  matmul_buf(omega_f, act_map, c.f.data(), attention_dim, channels, p);
  matmul_buf(omega_g, act_map, c.g.data(), attention_dim, channels, p);
  matmul_buf(omega_h, act_map, c.h.data(), attention_dim, channels, p);

  // scores[q][p'] = f(:,q) . g(:,p')
  matmul_at_b(c.f.data(), c.g.data(), c.scores.data(), p, attention_dim, p);

  for (std::size_t q = 0; q < p; ++q) {
    softmax_buf(c.scores.data() + q * p, c.gamma.data() + q * p, p, 1.0);
  }

  // attended(:,q) = sum_p' gamma[q][p'] * h(:,p')  => attended = h * gamma^T
  matmul_a_bt_acc(c.h.data(), c.gamma.data(), c.attended.data(), attention_dim, p, p);

  matmul_buf(omega_v, c.attended.data(), out, channels, attention_dim, p);
}

std::vector<double> build_features_table(
    const std::vector<std::vector<double>>& frame_features, std::size_t fc_dim) {
  if (frame_features.empty()) {
    throw std::invalid_argument("features table: no frame features given");
  }
  std::vector<double> table;
  table.reserve(frame_features.size() * fc_dim);
  for (std::size_t i = 0; i < frame_features.size(); ++i) {
    if (frame_features[i].size() != fc_dim) {
      throw std::invalid_argument("features table: frame " + std::to_string(i) +
                                  " has length " + std::to_string(frame_features[i].size()) +
                                  ", expected " + std::to_string(fc_dim));
    }
    table.insert(table.end(), frame_features[i].begin(), frame_features[i].end());
  }
  return table;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void lstm_forward(const double* x_seq, std::size_t steps, std::size_t input_dim,
                  const double* phi_as, const double* phi_ah,
                  const double* phi_bs, const double* phi_bh,
                  const double* phi_cs, const double* phi_ch,
                  std::size_t hidden, double* h_final, LstmCache* cache) {
  LstmCache local;
  LstmCache& cc = cache ? *cache : local;
  cc.x.assign(x_seq, x_seq + steps * input_dim);
  cc.h_in.assign(steps * hidden, 0.0);
  cc.a.assign(steps * hidden, 0.0);
  cc.b.assign(steps * hidden, 0.0);
  cc.c.assign(steps * hidden, 0.0);
  cc.cell.assign(steps * hidden, 0.0);

  std::vector<double> h(hidden, 0.0), d(hidden, 0.0);
  std::vector<double> pa(hidden), pb(hidden), pc(hidden);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* x = x_seq + t * input_dim;
    std::copy(h.begin(), h.end(), cc.h_in.begin() + static_cast<std::ptrdiff_t>(t * hidden));
    matmul_buf(phi_as, x, pa.data(), hidden, input_dim, 1);
    matmul_acc(phi_ah, h.data(), pa.data(), hidden, hidden, 1);
    matmul_buf(phi_bs, x, pb.data(), hidden, input_dim, 1);
    matmul_acc(phi_bh, h.data(), pb.data(), hidden, hidden, 1);
    matmul_buf(phi_cs, x, pc.data(), hidden, input_dim, 1);
    matmul_acc(phi_ch, h.data(), pc.data(), hidden, hidden, 1);
    for (std::size_t i = 0; i < hidden; ++i) {
      double a = sigmoid(pa[i]);
      double b = sigmoid(pb[i]);
      double ci = std::tanh(pc[i]);
      d[i] += a * ci;                 // additive cell update, no forget gate
      h[i] = b * std::tanh(d[i]);
      cc.a[t * hidden + i] = a;
      cc.b[t * hidden + i] = b;
      cc.c[t * hidden + i] = ci;
      cc.cell[t * hidden + i] = d[i];
    }
  }
  std::copy(h.begin(), h.end(), h_final);
}

namespace {

void stage_forward(const SstaConfig& cfg, const StageParams& sp,
                   const std::vector<double>& input, std::size_t h, std::size_t w,
                   StageActs& acts) {
  const std::size_t p = h * w;
  const std::size_t cc = cfg.conv_channels;
  acts.input = input;
  acts.pre_act.assign(cc * p, 0.0);
  conv2d_forward(input.data(), h, w, sp.bank.data(), cc, cfg.kernel_size,
                 Activation::none, acts.pre_act.data());
  acts.act = acts.pre_act;
  for (double& v : acts.act) v = std::max(v, 0.0);
  acts.attended_out.assign(cc * p, 0.0);
  ssa_forward(acts.act.data(), cc, p, sp.omega_f.data(), sp.omega_g.data(),
              sp.omega_h.data(), sp.omega_v.data(), cfg.attention_dim,
              acts.attended_out.data(), &acts.ssa);
  acts.vec.assign(cfg.fc_dim, 0.0);
  matmul_buf(sp.fc.data(), acts.attended_out.data(), acts.vec.data(),
             cfg.fc_dim, cc * p, 1);
}

void conv1d_forward(const SstaConfig& cfg, const std::vector<double>& w1,
                    const std::vector<double>& table, std::vector<double>& out) {
  const std::size_t K = cfg.sequence_length;
  const std::size_t F = cfg.fc_dim;
  const std::size_t M = cfg.conv1d_channels;
  const auto kc = static_cast<std::ptrdiff_t>(cfg.conv1d_kernel / 2);
  out.assign(K * M, 0.0);
  for (std::size_t t = 0; t < K; ++t) {
    for (std::size_t o = 0; o < M; ++o) {
      double acc = 0.0;
      for (std::ptrdiff_t dd = -kc; dd <= kc; ++dd) {
        auto tt = static_cast<std::ptrdiff_t>(t) + dd;
        if (tt < 0 || tt >= static_cast<std::ptrdiff_t>(K)) continue;
        const double* row = table.data() + static_cast<std::size_t>(tt) * F;
        const double* wrow = w1.data() + (o * F) * cfg.conv1d_kernel +
                             static_cast<std::size_t>(dd + kc);
        for (std::size_t j = 0; j < F; ++j) {
          acc += wrow[j * cfg.conv1d_kernel] * row[j];
        }
      }
      out[t * M + o] = acc;
    }
  }
}

}  // namespace

std::vector<double> forward(const SstaParams& params, const FrameSequence& seq,
                            SstaActivations* acts) {
  const SstaConfig& cfg = params.cfg;
  if (seq.frames.size() != cfg.sequence_length) {
    throw std::invalid_argument("forward: sequence has " + std::to_string(seq.frames.size()) +
                                " frames, config expects " + std::to_string(cfg.sequence_length));
  }
  if (seq.one_hot.size() != cfg.classes) {
    throw std::invalid_argument("forward: label length " + std::to_string(seq.one_hot.size()) +
                                " does not match " + std::to_string(cfg.classes) + " classes");
  }
  SstaActivations local;
  SstaActivations& A = acts ? *acts : local;
  A.frames.assign(cfg.sequence_length, {});

  std::vector<std::vector<double>> features(cfg.sequence_length);
  for (std::size_t i = 0; i < cfg.sequence_length; ++i) {
    const Frame& fr = seq.frames[i];
    if (fr.channels != 1 || fr.height != cfg.frame_height || fr.width != cfg.frame_width) {
      throw std::invalid_argument("forward: frame " + std::to_string(i) + " is " +
                                  std::to_string(fr.height) + "x" + std::to_string(fr.width) +
                                  "x" + std::to_string(fr.channels) + ", config expects " +
                                  std::to_string(cfg.frame_height) + "x" +
                                  std::to_string(cfg.frame_width) + "x1");
    }
    A.frames[i].resize(cfg.ssa_stages);
    std::vector<double> cur = fr.data;
    for (std::size_t s = 0; s < cfg.ssa_stages; ++s) {
      std::size_t h, w;
      cfg.stage_dims(s, h, w);
      stage_forward(cfg, params.stages[s], cur, h, w, A.frames[i][s]);
      cur = A.frames[i][s].vec;
    }
    features[i] = cur;
  }

  A.table = build_features_table(features, cfg.fc_dim);
  conv1d_forward(cfg, params.conv1d, A.table, A.conv1d_out);

  A.h_final.assign(cfg.lstm_hidden, 0.0);
  lstm_forward(A.conv1d_out.data(), cfg.sequence_length, cfg.conv1d_channels,
               params.phi_as.data(), params.phi_ah.data(),
               params.phi_bs.data(), params.phi_bh.data(),
               params.phi_cs.data(), params.phi_ch.data(),
               cfg.lstm_hidden, A.h_final.data(), &A.lstm);

  A.logits.assign(cfg.classes, 0.0);
  matmul_buf(params.head.data(), A.h_final.data(), A.logits.data(),
             cfg.classes, cfg.lstm_hidden, 1);
  A.yhat = softmax(std::span<const double>(A.logits), 1.0);
  return A.yhat;
}

double loss(const std::vector<double>& yhat, const std::vector<double>& one_hot) {
  if (yhat.size() != one_hot.size()) {
    throw std::invalid_argument("loss: prediction length " + std::to_string(yhat.size()) +
                                " vs label length " + std::to_string(one_hot.size()));
  }
  double l = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    if (one_hot[i] != 0.0) l -= one_hot[i] * std::log(std::max(yhat[i], 1e-12));
  }
  return l;
}

double batch_loss(const SstaParams& params, const std::vector<const FrameSequence*>& batch) {
  double total = 0.0;
  for (const FrameSequence* s : batch) total += loss(forward(params, *s), s->one_hot);
  return total;
}

namespace {

void conv2d_backward(const double* input, std::size_t h, std::size_t w,
                     const double* bank, std::size_t out_ch, std::size_t k,
                     const double* d_out, double* d_bank, double* d_input) {
  const auto kc = static_cast<std::ptrdiff_t>(k / 2);
  const auto hh = static_cast<std::ptrdiff_t>(h);
  const auto ww = static_cast<std::ptrdiff_t>(w);
  for (std::size_t o = 0; o < out_ch; ++o) {
    const double* dz = d_out + o * h * w;
    const double* kern = bank + o * k * k;
    double* dk = d_bank + o * k * k;
    for (std::ptrdiff_t y = 0; y < hh; ++y) {
      for (std::ptrdiff_t x = 0; x < ww; ++x) {
        double g = dz[y * ww + x];
        if (g == 0.0) continue;
        for (std::ptrdiff_t u = -kc; u <= kc; ++u) {
          std::ptrdiff_t yy = y + u;
          if (yy < 0 || yy >= hh) continue;
          for (std::ptrdiff_t v = -kc; v <= kc; ++v) {
            std::ptrdiff_t xx = x + v;
            if (xx < 0 || xx >= ww) continue;
            dk[(u + kc) * static_cast<std::ptrdiff_t>(k) + (v + kc)] += g * input[yy * ww + xx];
            if (d_input) d_input[yy * ww + xx] += g * kern[(u + kc) * static_cast<std::ptrdiff_t>(k) + (v + kc)];
          }
        }
      }
    }
  }
}

// backward through one Conv2D -> SSA -> FC stage; returns gradient wrt the
// stage input map in d_input (may be null for stage 0)
void stage_backward(const SstaConfig& cfg, const StageParams& sp,
                    const StageActs& acts, std::size_t h, std::size_t w,
                    const double* d_vec, StageParams& grad, double* d_input) {
  const std::size_t p = h * w;
  const std::size_t cc = cfg.conv_channels;
  const std::size_t da = cfg.attention_dim;
  const std::size_t flat = cc * p;

  // FC: vec = fc * attended_out
  // d_fc += d_vec (x) attended_out ; d_attended = fc^T d_vec
  matmul_a_bt_acc(d_vec, acts.attended_out.data(), grad.fc.data(), cfg.fc_dim, 1, flat);
  std::vector<double> d_att_out(flat, 0.0);
  matmul_at_b(sp.fc.data(), d_vec, d_att_out.data(), flat, cfg.fc_dim, 1);

  // omega_v: out = omega_v * attended
  std::vector<double> d_u(da * p, 0.0);
  matmul_at_b(sp.omega_v.data(), d_att_out.data(), d_u.data(), da, cc, p);
  matmul_a_bt_acc(d_att_out.data(), acts.ssa.attended.data(), grad.omega_v.data(), cc, p, da);

  // attended = h * gamma^T
  std::vector<double> d_h(da * p, 0.0);
  matmul_buf(d_u.data(), acts.ssa.gamma.data(), d_h.data(), da, p, p);
  std::vector<double> d_gamma(p * p, 0.0);
  matmul_at_b(d_u.data(), acts.ssa.h.data(), d_gamma.data(), p, da, p);

  // softmax rows
  std::vector<double> d_scores(p * p, 0.0);
  for (std::size_t q = 0; q < p; ++q) {
    const double* gr = acts.ssa.gamma.data() + q * p;
    const double* dgr = d_gamma.data() + q * p;
    double dot = 0.0;
    for (std::size_t j = 0; j < p; ++j) dot += gr[j] * dgr[j];
    double* dsr = d_scores.data() + q * p;
    for (std::size_t j = 0; j < p; ++j) dsr[j] = gr[j] * (dgr[j] - dot);
  }

  // scores = f^T g
  std::vector<double> d_f(da * p, 0.0), d_g(da * p, 0.0);
  matmul_a_bt_acc(acts.ssa.g.data(), d_scores.data(), d_f.data(), da, p, p);
  matmul_buf(acts.ssa.f.data(), d_scores.data(), d_g.data(), da, p, p);

  // f/g/h = omega_* act
  std::vector<double> d_act(flat, 0.0);
  matmul_at_b(sp.omega_f.data(), d_f.data(), d_act.data(), cc, da, p);
  {
    std::vector<double> tmp(flat, 0.0);
    matmul_at_b(sp.omega_g.data(), d_g.data(), tmp.data(), cc, da, p);
    for (std::size_t i = 0; i < flat; ++i) d_act[i] += tmp[i];
    matmul_at_b(sp.omega_h.data(), d_h.data(), tmp.data(), cc, da, p);
    for (std::size_t i = 0; i < flat; ++i) d_act[i] += tmp[i];
  }
  matmul_a_bt_acc(d_f.data(), acts.act.data(), grad.omega_f.data(), da, p, cc);
  matmul_a_bt_acc(d_g.data(), acts.act.data(), grad.omega_g.data(), da, p, cc);
  matmul_a_bt_acc(d_h.data(), acts.act.data(), grad.omega_h.data(), da, p, cc);

  // ReLU
  for (std::size_t i = 0; i < flat; ++i)
    if (acts.pre_act[i] <= 0.0) d_act[i] = 0.0;

  conv2d_backward(acts.input.data(), h, w, sp.bank.data(), cc, cfg.kernel_size,
                  d_act.data(), grad.bank.data(), d_input);
}

void conv1d_backward(const SstaConfig& cfg, const std::vector<double>& w1,
                     const std::vector<double>& table, const std::vector<double>& d_out,
                     std::vector<double>& d_w1, std::vector<double>& d_table) {
  const std::size_t K = cfg.sequence_length;
  const std::size_t F = cfg.fc_dim;
  const std::size_t M = cfg.conv1d_channels;
  const auto kc = static_cast<std::ptrdiff_t>(cfg.conv1d_kernel / 2);
  d_table.assign(K * F, 0.0);
  for (std::size_t t = 0; t < K; ++t) {
    for (std::size_t o = 0; o < M; ++o) {
      double g = d_out[t * M + o];
      if (g == 0.0) continue;
      for (std::ptrdiff_t dd = -kc; dd <= kc; ++dd) {
        auto tt = static_cast<std::ptrdiff_t>(t) + dd;
        if (tt < 0 || tt >= static_cast<std::ptrdiff_t>(K)) continue;
        const double* row = table.data() + static_cast<std::size_t>(tt) * F;
        double* drow = d_table.data() + static_cast<std::size_t>(tt) * F;
        std::size_t base = (o * F) * cfg.conv1d_kernel + static_cast<std::size_t>(dd + kc);
        for (std::size_t j = 0; j < F; ++j) {
          d_w1[base + j * cfg.conv1d_kernel] += g * row[j];
          drow[j] += g * w1[base + j * cfg.conv1d_kernel];
        }
      }
    }
  }
}

}  // namespace

void backward(const SstaParams& params, const SstaActivations& acts,
              const FrameSequence& seq, SstaParams& grad) {
  const SstaConfig& cfg = params.cfg;
  const std::size_t K = cfg.sequence_length;
  const std::size_t hid = cfg.lstm_hidden;
  const std::size_t M = cfg.conv1d_channels;

  // head + softmax/cross-entropy
  std::vector<double> dz(cfg.classes);
  for (std::size_t i = 0; i < cfg.classes; ++i) dz[i] = acts.yhat[i] - seq.one_hot[i];
  matmul_a_bt_acc(dz.data(), acts.h_final.data(), grad.head.data(), cfg.classes, 1, hid);
  std::vector<double> dh(hid, 0.0);
  matmul_at_b(params.head.data(), dz.data(), dh.data(), hid, cfg.classes, 1);

  // LSTM backward through time, dd carries across steps unchanged because
  // the cell update is purely additive
  std::vector<double> dd(hid, 0.0);
  std::vector<double> d_x(K * M, 0.0);
  std::vector<double> dpa(hid), dpb(hid), dpc(hid), dh_next(hid);
  for (std::size_t t = K; t-- > 0;) {
    const double* a = acts.lstm.a.data() + t * hid;
    const double* b = acts.lstm.b.data() + t * hid;
    const double* c = acts.lstm.c.data() + t * hid;
    const double* cell = acts.lstm.cell.data() + t * hid;
    const double* x = acts.lstm.x.data() + t * M;
    const double* h_in = acts.lstm.h_in.data() + t * hid;
    for (std::size_t i = 0; i < hid; ++i) {
      double tc = std::tanh(cell[i]);
      double db = dh[i] * tc;
      dd[i] += dh[i] * b[i] * (1.0 - tc * tc);
      double da = dd[i] * c[i];
      double dc = dd[i] * a[i];
      dpa[i] = da * a[i] * (1.0 - a[i]);
      dpb[i] = db * b[i] * (1.0 - b[i]);
      dpc[i] = dc * (1.0 - c[i] * c[i]);
    }
    matmul_a_bt_acc(dpa.data(), x, grad.phi_as.data(), hid, 1, M);
    matmul_a_bt_acc(dpa.data(), h_in, grad.phi_ah.data(), hid, 1, hid);
    matmul_a_bt_acc(dpb.data(), x, grad.phi_bs.data(), hid, 1, M);
    matmul_a_bt_acc(dpb.data(), h_in, grad.phi_bh.data(), hid, 1, hid);
    matmul_a_bt_acc(dpc.data(), x, grad.phi_cs.data(), hid, 1, M);
    matmul_a_bt_acc(dpc.data(), h_in, grad.phi_ch.data(), hid, 1, hid);

    double* dxt = d_x.data() + t * M;
    matmul_at_b(params.phi_as.data(), dpa.data(), dxt, M, hid, 1);
    std::vector<double> tmp(M, 0.0);
    matmul_at_b(params.phi_bs.data(), dpb.data(), tmp.data(), M, hid, 1);
    for (std::size_t i = 0; i < M; ++i) dxt[i] += tmp[i];
    matmul_at_b(params.phi_cs.data(), dpc.data(), tmp.data(), M, hid, 1);
    for (std::size_t i = 0; i < M; ++i) dxt[i] += tmp[i];

    matmul_at_b(params.phi_ah.data(), dpa.data(), dh_next.data(), hid, hid, 1);
    std::vector<double> tmph(hid, 0.0);
    matmul_at_b(params.phi_bh.data(), dpb.data(), tmph.data(), hid, hid, 1);
    for (std::size_t i = 0; i < hid; ++i) dh_next[i] += tmph[i];
    matmul_at_b(params.phi_ch.data(), dpc.data(), tmph.data(), hid, hid, 1);
    for (std::size_t i = 0; i < hid; ++i) dh_next[i] += tmph[i];
    dh = dh_next;
  }

  std::vector<double> d_table;
  conv1d_backward(cfg, params.conv1d, acts.table, d_x, grad.conv1d, d_table);

  // per-frame stages, deepest stage first
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<double> d_vec(d_table.begin() + static_cast<std::ptrdiff_t>(i * cfg.fc_dim),
                              d_table.begin() + static_cast<std::ptrdiff_t>((i + 1) * cfg.fc_dim));
    for (std::size_t s = cfg.ssa_stages; s-- > 0;) {
      std::size_t h, w;
      cfg.stage_dims(s, h, w);
      if (s == 0) {
        stage_backward(cfg, params.stages[s], acts.frames[i][s], h, w,
                       d_vec.data(), grad.stages[s], nullptr);
      } else {
        std::vector<double> d_in(h * w, 0.0);
        stage_backward(cfg, params.stages[s], acts.frames[i][s], h, w,
                       d_vec.data(), grad.stages[s], d_in.data());
        d_vec = std::move(d_in);  // stage input is the previous stage's vec
      }
    }
  }
}

double loss_and_grad(const SstaParams& params,
                     const std::vector<const FrameSequence*>& batch,
                     SstaParams& grad) {
  double total = 0.0;
  SstaActivations acts;
  for (const FrameSequence* s : batch) {
    std::vector<double> yhat = forward(params, *s, &acts);
    total += loss(yhat, s->one_hot);
    backward(params, acts, *s, grad);
  }
  return total;
}

void sgd_step(std::vector<double>& w, const std::vector<double>& g, double mu) {
  if (w.size() != g.size()) {
    throw std::invalid_argument("sgd_step: weight/gradient length mismatch, " +
                                std::to_string(w.size()) + " vs " + std::to_string(g.size()));
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw std::runtime_error("sgd_step: non-finite gradient at index " + std::to_string(i));
    }
    w[i] -= mu * g[i];
  }
}

void sgd_step(SstaParams& params, const SstaParams& grad, double mu) {
  auto& gref = const_cast<SstaParams&>(grad);
  auto pb = params.blocks();
  auto gb = gref.blocks();
  for (std::size_t i = 0; i < pb.size(); ++i) {
    sgd_step(*pb[i].data, *gb[i].data, mu);
  }
}

}  // namespace fedssta
