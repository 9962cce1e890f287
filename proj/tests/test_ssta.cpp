#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fedssta/ssta.hpp"

using namespace fedssta;

namespace {

SstaConfig toy_config() {
  SstaConfig cfg;
  cfg.frame_height = 4;
  cfg.frame_width = 4;
  cfg.conv_channels = 2;
  cfg.kernel_size = 3;
  cfg.attention_dim = 2;
  cfg.fc_dim = 4;
  cfg.ssa_stages = 2;
  cfg.sequence_length = 3;
  cfg.conv1d_channels = 2;
  cfg.conv1d_kernel = 3;
  cfg.lstm_hidden = 3;
  cfg.classes = 2;
  return cfg;
}

// deterministic integer-derived frames, no RNG, no libm
Frame pattern_frame(const SstaConfig& cfg, std::size_t i) {
  Frame f = Frame::zeros(cfg.frame_height, cfg.frame_width);
  for (std::size_t y = 0; y < cfg.frame_height; ++y)
    for (std::size_t x = 0; x < cfg.frame_width; ++x)
      f.at(y, x) = static_cast<double>(((i + 1) * (y + 2) * (x + 3)) % 17) / 17.0;
  return f;
}

FrameSequence pattern_sequence(const SstaConfig& cfg, std::size_t label) {
  FrameSequence seq;
  for (std::size_t i = 0; i < cfg.sequence_length; ++i)
    seq.frames.push_back(pattern_frame(cfg, i + 7 * label));
  seq.one_hot = FrameSequence::make_one_hot(label, cfg.classes);
  return seq;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// plain-loop forward over the whole network, independent of the library path
std::vector<double> oracle_forward(const SstaParams& P, const FrameSequence& seq) {
  const SstaConfig& cfg = P.cfg;
  std::vector<std::vector<double>> feats;
  for (const Frame& fr : seq.frames) {
    std::vector<double> cur = fr.data;
    for (std::size_t s = 0; s < cfg.ssa_stages; ++s) {
      std::size_t h, w;
      cfg.stage_dims(s, h, w);
      const std::size_t p = h * w, cc = cfg.conv_channels, da = cfg.attention_dim;
      const StageParams& sp = P.stages[s];
      const auto kc = static_cast<std::ptrdiff_t>(cfg.kernel_size / 2);

      std::vector<double> act(cc * p, 0.0);
      for (std::size_t o = 0; o < cc; ++o) {
        for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(h); ++y) {
          for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(w); ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t u = -kc; u <= kc; ++u)
              for (std::ptrdiff_t v = -kc; v <= kc; ++v) {
                std::ptrdiff_t yy = y + u, xx = x + v;
                if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
                if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                acc += sp.bank[(o * cfg.kernel_size + static_cast<std::size_t>(u + kc)) *
                                   cfg.kernel_size +
                               static_cast<std::size_t>(v + kc)] *
                       cur[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)];
              }
            act[o * p + static_cast<std::size_t>(y * static_cast<std::ptrdiff_t>(w) + x)] =
                acc > 0.0 ? acc : 0.0;
          }
        }
      }

      std::vector<double> F(da * p, 0.0), G(da * p, 0.0), H(da * p, 0.0);
      for (std::size_t d = 0; d < da; ++d)
        for (std::size_t q = 0; q < p; ++q)
          for (std::size_t c = 0; c < cc; ++c) {
            F[d * p + q] += sp.omega_f[d * cc + c] * act[c * p + q];
            G[d * p + q] += sp.omega_g[d * cc + c] * act[c * p + q];
            H[d * p + q] += sp.omega_h[d * cc + c] * act[c * p + q];
          }
      std::vector<double> out(cc * p, 0.0);
      for (std::size_t q = 0; q < p; ++q) {
        std::vector<double> sc(p, 0.0);
        double mx = -1e300;
        for (std::size_t pp = 0; pp < p; ++pp) {
          for (std::size_t d = 0; d < da; ++d) sc[pp] += F[d * p + q] * G[d * p + pp];
          mx = std::max(mx, sc[pp]);
        }
        double z = 0.0;
        for (std::size_t pp = 0; pp < p; ++pp) z += std::exp(sc[pp] - mx);
        for (std::size_t d = 0; d < da; ++d) {
          double u = 0.0;
          for (std::size_t pp = 0; pp < p; ++pp)
            u += std::exp(sc[pp] - mx) / z * H[d * p + pp];
          for (std::size_t c = 0; c < cc; ++c) out[c * p + q] += sp.omega_v[c * da + d] * u;
        }
      }

      std::vector<double> vec(cfg.fc_dim, 0.0);
      for (std::size_t i = 0; i < cfg.fc_dim; ++i)
        for (std::size_t j = 0; j < cc * p; ++j) vec[i] += sp.fc[i * cc * p + j] * out[j];
      cur = vec;
    }
    feats.push_back(cur);
  }

  const std::size_t K = cfg.sequence_length, Fd = cfg.fc_dim, M = cfg.conv1d_channels;
  const auto kc1 = static_cast<std::ptrdiff_t>(cfg.conv1d_kernel / 2);
  std::vector<double> rows(K * M, 0.0);
  for (std::size_t t = 0; t < K; ++t)
    for (std::size_t o = 0; o < M; ++o)
      for (std::ptrdiff_t dd = -kc1; dd <= kc1; ++dd) {
        std::ptrdiff_t tt = static_cast<std::ptrdiff_t>(t) + dd;
        if (tt < 0 || tt >= static_cast<std::ptrdiff_t>(K)) continue;
        for (std::size_t j = 0; j < Fd; ++j)
          rows[t * M + o] += P.conv1d[(o * Fd + j) * cfg.conv1d_kernel +
                                      static_cast<std::size_t>(dd + kc1)] *
                             feats[static_cast<std::size_t>(tt)][j];
      }

  const std::size_t hid = cfg.lstm_hidden;
  std::vector<double> h(hid, 0.0), d(hid, 0.0);
  for (std::size_t t = 0; t < K; ++t) {
    std::vector<double> pa(hid, 0.0), pb(hid, 0.0), pc(hid, 0.0);
    for (std::size_t i = 0; i < hid; ++i) {
      for (std::size_t j = 0; j < M; ++j) {
        pa[i] += P.phi_as[i * M + j] * rows[t * M + j];
        pb[i] += P.phi_bs[i * M + j] * rows[t * M + j];
        pc[i] += P.phi_cs[i * M + j] * rows[t * M + j];
      }
      for (std::size_t j = 0; j < hid; ++j) {
        pa[i] += P.phi_ah[i * hid + j] * h[j];
        pb[i] += P.phi_bh[i * hid + j] * h[j];
        pc[i] += P.phi_ch[i * hid + j] * h[j];
      }
    }
    for (std::size_t i = 0; i < hid; ++i) {
      d[i] += sig(pa[i]) * std::tanh(pc[i]);
      h[i] = sig(pb[i]) * std::tanh(d[i]);
    }
  }

  std::vector<double> logits(cfg.classes, 0.0);
  for (std::size_t c = 0; c < cfg.classes; ++c)
    for (std::size_t j = 0; j < hid; ++j) logits[c] += P.head[c * hid + j] * h[j];
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  std::vector<double> yhat(cfg.classes);
  for (std::size_t c = 0; c < cfg.classes; ++c) yhat[c] = std::exp(logits[c] - mx) / z;
  return yhat;
}

}  // namespace

TEST_SUITE_BEGIN("ssta");

TEST_CASE("config validation") {
  SstaConfig cfg = toy_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.kernel_size = 2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = toy_config();
  cfg.classes = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = toy_config();
  cfg.sequence_length = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("later stages see the fc vector reshaped near-square") {
  SstaConfig cfg = toy_config();
  std::size_t h = 0, w = 0;
  cfg.stage_dims(0, h, w);
  CHECK(h == 4);
  CHECK(w == 4);
  cfg.stage_dims(1, h, w);
  CHECK(h == 2);
  CHECK(w == 2);
  cfg.fc_dim = 16;
  cfg.stage_dims(1, h, w);
  CHECK(h == 4);
  CHECK(w == 4);
  cfg.fc_dim = 6;
  cfg.stage_dims(1, h, w);
  CHECK(h == 2);
  CHECK(w == 3);
}

TEST_CASE("one-hot construction and label recovery") {
  std::vector<double> v = FrameSequence::make_one_hot(1, 3);
  CHECK(v == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(FrameSequence::make_one_hot(3, 3), std::invalid_argument);
  FrameSequence seq;
  seq.one_hot = v;
  CHECK(seq.label() == 1);
}

TEST_CASE("flatten and unflatten round-trip bit-exactly") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(11));
  std::vector<double> flat = p.flatten();
  CHECK(flat.size() == cfg.param_count());
  SstaParams q = SstaParams::unflatten(cfg, flat);
  CHECK(q.flatten() == flat);
  flat.pop_back();
  CHECK_THROWS_AS(SstaParams::unflatten(cfg, flat), std::invalid_argument);
}

TEST_CASE("init draws every block within its fan-in scale") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(3));
  // conv bank: fan_in = 9 -> s = sqrt(3/9)
  double s = std::sqrt(1.0 / 3.0);
  for (double v : p.stages[0].bank) {
    CHECK(v >= -s);
    CHECK(v <= s);
  }
  double mags = 0.0;
  for (double v : p.flatten()) mags += std::fabs(v);
  CHECK(mags > 0.0);
  // same seed -> identical params
  SstaParams q = SstaParams::init(cfg, Rng(3));
  CHECK(q.flatten() == p.flatten());
}

TEST_CASE("conv2d: zero bank gives zero output") {
  std::vector<double> in(36, 1.5);
  std::vector<double> bank(2 * 9, 0.0);
  std::vector<double> out(2 * 36, 7.0);
  conv2d_forward(in.data(), 6, 6, bank.data(), 2, 3, Activation::relu, out.data());
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("conv2d: 1x1 identity kernel reproduces the input") {
  Rng rng(5);
  std::vector<double> in(30);
  for (double& v : in) v = rng.uniform(-1.0, 1.0);
  std::vector<double> bank = {1.0};
  std::vector<double> out(30, 0.0);
  conv2d_forward(in.data(), 5, 6, bank.data(), 1, 1, Activation::none, out.data());
  CHECK(out == in);
}

TEST_CASE("conv2d: random 6x6 map matches the sliding-window oracle") {
  Rng rng(9);
  std::vector<double> in(36), bank(3 * 9);
  for (double& v : in) v = rng.uniform(-1.0, 1.0);
  for (double& v : bank) v = rng.uniform(-1.0, 1.0);
  std::vector<double> out(3 * 36, 0.0);
  conv2d_forward(in.data(), 6, 6, bank.data(), 3, 3, Activation::relu, out.data());
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::ptrdiff_t y = 0; y < 6; ++y) {
      for (std::ptrdiff_t x = 0; x < 6; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t u = -1; u <= 1; ++u)
          for (std::ptrdiff_t v = -1; v <= 1; ++v) {
            if (y + u < 0 || y + u > 5 || x + v < 0 || x + v > 5) continue;
            acc += bank[o * 9 + static_cast<std::size_t>((u + 1) * 3 + (v + 1))] *
                   in[static_cast<std::size_t>((y + u) * 6 + (x + v))];
          }
        acc = std::max(acc, 0.0);
        CHECK(out[o * 36 + static_cast<std::size_t>(y * 6 + x)] ==
              doctest::Approx(acc).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("ssa: zero omega_f gives uniform attention") {
  Rng rng(21);
  const std::size_t cc = 2, p = 4, da = 2;
  std::vector<double> act(cc * p), zf(da * cc, 0.0), g(da * cc), h(da * cc), v(cc * da);
  for (double& x : act) x = rng.uniform(-1.0, 1.0);
  for (double& x : g) x = rng.uniform(-1.0, 1.0);
  for (double& x : h) x = rng.uniform(-1.0, 1.0);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  std::vector<double> out(cc * p, 0.0);
  SsaCache cache;
  ssa_forward(act.data(), cc, p, zf.data(), g.data(), h.data(), v.data(), da, out.data(),
              &cache);
  for (double w : cache.gamma) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("ssa: single position degenerates to v(h(S))") {
  Rng rng(22);
  const std::size_t cc = 3, da = 2;
  std::vector<double> act(cc), of(da * cc), og(da * cc), oh(da * cc), ov(cc * da);
  for (double& x : act) x = rng.uniform(-1.0, 1.0);
  for (double& x : of) x = rng.uniform(-1.0, 1.0);
  for (double& x : og) x = rng.uniform(-1.0, 1.0);
  for (double& x : oh) x = rng.uniform(-1.0, 1.0);
  for (double& x : ov) x = rng.uniform(-1.0, 1.0);
  std::vector<double> out(cc, 0.0);
  SsaCache cache;
  ssa_forward(act.data(), cc, 1, of.data(), og.data(), oh.data(), ov.data(), da, out.data(),
              &cache);
  CHECK(cache.gamma.size() == 1);
  CHECK(cache.gamma[0] == 1.0);
  for (std::size_t c = 0; c < cc; ++c) {
    double expect = 0.0;
    for (std::size_t d = 0; d < da; ++d) {
      double hd = 0.0;
      for (std::size_t c2 = 0; c2 < cc; ++c2) hd += oh[d * cc + c2] * act[c2];
      expect += ov[c * da + d] * hd;
    }
    CHECK(out[c] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("ssa: 2x2 spatial map matches the dense oracle") {
  Rng rng(23);
  const std::size_t cc = 2, p = 4, da = 2;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> act(cc * p), of(da * cc), og(da * cc), oh(da * cc), ov(cc * da);
    for (double& x : act) x = rng.uniform(-1.0, 1.0);
    for (double& x : of) x = rng.uniform(-1.0, 1.0);
    for (double& x : og) x = rng.uniform(-1.0, 1.0);
    for (double& x : oh) x = rng.uniform(-1.0, 1.0);
    for (double& x : ov) x = rng.uniform(-1.0, 1.0);
    std::vector<double> out(cc * p, 0.0);
    SsaCache cache;
    ssa_forward(act.data(), cc, p, of.data(), og.data(), oh.data(), ov.data(), da, out.data(),
                &cache);

    std::vector<double> F(da * p, 0.0), G(da * p, 0.0), H(da * p, 0.0);
    for (std::size_t d = 0; d < da; ++d)
      for (std::size_t q = 0; q < p; ++q)
        for (std::size_t c = 0; c < cc; ++c) {
          F[d * p + q] += of[d * cc + c] * act[c * p + q];
          G[d * p + q] += og[d * cc + c] * act[c * p + q];
          H[d * p + q] += oh[d * cc + c] * act[c * p + q];
        }
    for (std::size_t q = 0; q < p; ++q) {
      std::vector<double> sc(p, 0.0);
      for (std::size_t pp = 0; pp < p; ++pp)
        for (std::size_t d = 0; d < da; ++d) sc[pp] += F[d * p + q] * G[d * p + pp];
      double z = 0.0;
      for (double s : sc) z += std::exp(s);
      double rowsum = 0.0;
      for (std::size_t pp = 0; pp < p; ++pp) {
        double gam = std::exp(sc[pp]) / z;
        CHECK(cache.gamma[q * p + pp] == doctest::Approx(gam).epsilon(1e-12));
        CHECK(cache.gamma[q * p + pp] >= 0.0);
        rowsum += cache.gamma[q * p + pp];
      }
      CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-10));
      for (std::size_t c = 0; c < cc; ++c) {
        double expect = 0.0;
        for (std::size_t d = 0; d < da; ++d) {
          double u = 0.0;
          for (std::size_t pp = 0; pp < p; ++pp) u += std::exp(sc[pp]) / z * H[d * p + pp];
          expect += ov[c * da + d] * u;
        }
        CHECK(out[c * p + q] == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("features table stacks rows in order") {
  std::vector<double> v = {1.0, 2.0, 3.0};
  CHECK(build_features_table({v}, 3) == v);
  std::vector<double> t = build_features_table({v, v}, 3);
  CHECK(t == std::vector<double>{1.0, 2.0, 3.0, 1.0, 2.0, 3.0});
  std::vector<double> a = {1.0, 0.0}, b = {0.0, 1.0}, c = {5.0, 5.0};
  t = build_features_table({a, b, c}, 2);
  CHECK(t == std::vector<double>{1.0, 0.0, 0.0, 1.0, 5.0, 5.0});
  CHECK_THROWS_AS(build_features_table({}, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_features_table({a, v}, 2), std::invalid_argument);
}

TEST_CASE("lstm: all-zero weights pin every hidden state at zero") {
  const std::size_t steps = 4, in_dim = 3, hid = 5;
  std::vector<double> x(steps * in_dim, 0.7);
  std::vector<double> ws(hid * in_dim, 0.0), wh(hid * hid, 0.0);
  std::vector<double> h(hid, 9.0);
  LstmCache cache;
  lstm_forward(x.data(), steps, in_dim, ws.data(), wh.data(), ws.data(), wh.data(), ws.data(),
               wh.data(), hid, h.data(), &cache);
  for (double v : h) CHECK(v == 0.0);
  for (double v : cache.cell) CHECK(v == 0.0);
  for (double v : cache.a) CHECK(v == 0.5);
  for (double v : cache.b) CHECK(v == 0.5);
}

TEST_CASE("lstm: zero input weights saturate the gates at sigma(0)") {
  Rng rng(31);
  const std::size_t in_dim = 4, hid = 3;
  std::vector<double> x(in_dim);
  for (double& v : x) v = rng.uniform(-2.0, 2.0);
  std::vector<double> zs(hid * in_dim, 0.0), wh(hid * hid);
  for (double& v : wh) v = rng.uniform(-1.0, 1.0);
  std::vector<double> h(hid, 1.0);
  LstmCache cache;
  lstm_forward(x.data(), 1, in_dim, zs.data(), wh.data(), zs.data(), wh.data(), zs.data(),
               wh.data(), hid, h.data(), &cache);
  for (std::size_t i = 0; i < hid; ++i) {
    CHECK(cache.a[i] == 0.5);
    CHECK(cache.b[i] == 0.5);
    CHECK(cache.c[i] == 0.0);
    CHECK(h[i] == 0.0);
  }
}

TEST_CASE("lstm: 3-step sequence matches the literal step oracle") {
  Rng rng(32);
  const std::size_t steps = 3, in_dim = 2, hid = 4;
  std::vector<double> x(steps * in_dim);
  std::vector<double> as(hid * in_dim), bs(hid * in_dim), cs(hid * in_dim);
  std::vector<double> ah(hid * hid), bh(hid * hid), ch(hid * hid);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto* w : {&as, &bs, &cs}) {
    for (double& v : *w) v = rng.uniform(-1.0, 1.0);
  }
  for (auto* w : {&ah, &bh, &ch}) {
    for (double& v : *w) v = rng.uniform(-1.0, 1.0);
  }
  std::vector<double> got(hid, 0.0);
  lstm_forward(x.data(), steps, in_dim, as.data(), ah.data(), bs.data(), bh.data(), cs.data(),
               ch.data(), hid, got.data(), nullptr);

  std::vector<double> h(hid, 0.0), d(hid, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> pa(hid, 0.0), pb(hid, 0.0), pc(hid, 0.0);
    for (std::size_t i = 0; i < hid; ++i) {
      for (std::size_t j = 0; j < in_dim; ++j) {
        pa[i] += as[i * in_dim + j] * x[t * in_dim + j];
        pb[i] += bs[i * in_dim + j] * x[t * in_dim + j];
        pc[i] += cs[i * in_dim + j] * x[t * in_dim + j];
      }
      for (std::size_t j = 0; j < hid; ++j) {
        pa[i] += ah[i * hid + j] * h[j];
        pb[i] += bh[i * hid + j] * h[j];
        pc[i] += ch[i * hid + j] * h[j];
      }
    }
    for (std::size_t i = 0; i < hid; ++i) {
      d[i] += sig(pa[i]) * std::tanh(pc[i]);
      h[i] = sig(pb[i]) * std::tanh(d[i]);
    }
  }
  for (std::size_t i = 0; i < hid; ++i)
    CHECK(got[i] == doctest::Approx(h[i]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("forward: zero head gives the uniform distribution") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(41));
  std::fill(p.head.begin(), p.head.end(), 0.0);
  std::vector<double> yhat = forward(p, pattern_sequence(cfg, 0));
  REQUIRE(yhat.size() == 2);
  CHECK(yhat[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(yhat[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("forward is deterministic bit for bit") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(42));
  FrameSequence seq = pattern_sequence(cfg, 1);
  std::vector<double> a = forward(p, seq);
  std::vector<double> b = forward(p, seq);
  CHECK(a == b);
}

TEST_CASE("forward output is a probability vector with stochastic gamma rows") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(43));
  SstaActivations acts;
  std::vector<double> yhat = forward(p, pattern_sequence(cfg, 0), &acts);
  double sum = 0.0;
  for (double v : yhat) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
  for (const auto& frame : acts.frames) {
    REQUIRE(frame.size() == cfg.ssa_stages);
    for (const StageActs& st : frame) {
      std::size_t p_count = st.ssa.gamma.empty() ? 0 : st.act.size() / cfg.conv_channels;
      for (std::size_t q = 0; q < p_count; ++q) {
        double row = 0.0;
        for (std::size_t c = 0; c < p_count; ++c) {
          CHECK(st.ssa.gamma[q * p_count + c] >= 0.0);
          row += st.ssa.gamma[q * p_count + c];
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("second stage consumes the first stage's fc vector") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(44));
  SstaActivations acts;
  forward(p, pattern_sequence(cfg, 0), &acts);
  for (const auto& frame : acts.frames) {
    REQUIRE(frame.size() == 2);
    CHECK(frame[1].input == frame[0].vec);
    CHECK(frame[1].input.size() == cfg.fc_dim);
  }
}

TEST_CASE("forward rejects mismatched inputs") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::zeros(cfg);
  FrameSequence seq = pattern_sequence(cfg, 0);
  seq.frames.pop_back();
  CHECK_THROWS_AS(forward(p, seq), std::invalid_argument);
  seq = pattern_sequence(cfg, 0);
  seq.frames[1] = Frame::zeros(5, 4);
  CHECK_THROWS_AS(forward(p, seq), std::invalid_argument);
  seq = pattern_sequence(cfg, 0);
  seq.one_hot.push_back(0.0);
  CHECK_THROWS_AS(forward(p, seq), std::invalid_argument);
}

TEST_CASE("forward matches a full independent loop oracle") {
  SstaConfig cfg = toy_config();
  for (std::uint64_t seed : {101, 102, 103}) {
    SstaParams p = SstaParams::init(cfg, Rng(seed));
    for (std::size_t label = 0; label < 2; ++label) {
      FrameSequence seq = pattern_sequence(cfg, label);
      std::vector<double> got = forward(p, seq);
      std::vector<double> expect = oracle_forward(p, seq);
      REQUIRE(got.size() == expect.size());
      for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward reproduces the recorded golden prediction") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(2718));
  std::vector<double> yhat = forward(p, pattern_sequence(cfg, 0));

  std::ifstream in(std::string(TEST_DATA_DIR) + "/golden_forward.txt");
  REQUIRE_MESSAGE(in.good(), "missing golden_forward.txt fixture");
  std::vector<double> golden;
  double v = 0.0;
  while (in >> v) golden.push_back(v);
  REQUIRE(golden.size() == yhat.size());
  for (std::size_t i = 0; i < yhat.size(); ++i)
    CHECK(yhat[i] == doctest::Approx(golden[i]).epsilon(1e-12));
}

TEST_CASE("loss basics") {
  CHECK(loss({1.0, 0.0}, {1.0, 0.0}) == 0.0);
  CHECK(loss({0.5, 0.5}, {0.0, 1.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // clamp at 1e-12 keeps the loss finite
  CHECK(loss({0.0, 1.0}, {1.0, 0.0}) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK_THROWS_AS(loss({0.5, 0.5}, {1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("batch loss is additive") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(51));
  FrameSequence s0 = pattern_sequence(cfg, 0);
  FrameSequence s1 = pattern_sequence(cfg, 1);
  double both = batch_loss(p, {&s0, &s1});
  double split = batch_loss(p, {&s0}) + batch_loss(p, {&s1});
  CHECK(both == doctest::Approx(split).epsilon(1e-12));
}

TEST_CASE("perfect prediction silences the whole gradient") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(52));
  FrameSequence seq = pattern_sequence(cfg, 1);
  SstaActivations acts;
  forward(p, seq, &acts);
  acts.yhat = seq.one_hot;  // zero residual at the head
  SstaParams grad = SstaParams::zeros(cfg);
  backward(p, acts, seq, grad);
  for (double v : grad.flatten()) CHECK(v == 0.0);
}

TEST_CASE("duplicating a sample doubles the gradient") {
  SstaConfig cfg = toy_config();
  SstaParams p = SstaParams::init(cfg, Rng(53));
  FrameSequence seq = pattern_sequence(cfg, 0);
  SstaParams g1 = SstaParams::zeros(cfg);
  SstaParams g2 = SstaParams::zeros(cfg);
  loss_and_grad(p, {&seq}, g1);
  loss_and_grad(p, {&seq, &seq}, g2);
  std::vector<double> f1 = g1.flatten(), f2 = g2.flatten();
  for (std::size_t i = 0; i < f1.size(); ++i)
    CHECK(f2[i] == doctest::Approx(2.0 * f1[i]).epsilon(1e-12));
}

TEST_CASE("sgd step arithmetic") {
  std::vector<double> w = {1.0, 2.0, -3.0};
  std::vector<double> g = {1.0, 0.0, 0.5};
  sgd_step(w, g, 0.1);
  CHECK(w[0] == 0.9);
  CHECK(w[1] == 2.0);
  CHECK(w[2] == doctest::Approx(-3.05).epsilon(1e-15));

  std::vector<double> w2 = {0.4, -0.2};
  sgd_step(w2, {0.0, 0.0}, 0.5);
  CHECK(w2 == std::vector<double>{0.4, -0.2});
}

TEST_CASE("update recovery returns the negated gradient") {
  std::vector<double> w = {1.0, -0.5, 0.25};
  std::vector<double> g = {1.0, 0.3, -0.7};
  std::vector<double> w_new = w;
  const double mu = 0.1;
  sgd_step(w_new, g, mu);
  for (std::size_t i = 0; i < w.size(); ++i) {
    double rec = (w_new[i] - w[i]) / mu;
    CHECK(rec == doctest::Approx(-g[i]).epsilon(1e-12));
  }
}

TEST_CASE("non-finite gradients are rejected") {
  std::vector<double> w = {1.0};
  std::vector<double> g = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(sgd_step(w, g, 0.1), std::runtime_error);
}

TEST_SUITE_END();
