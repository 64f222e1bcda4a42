//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_NETS_HPP
#define MOLVAE_NETS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "molvae/corpus.hpp"
#include "molvae/optim.hpp"
#include "molvae/rng.hpp"

namespace molvae::nets {

using ad::ParamStore;
using ad::Tensor;

// Architecture of the three networks. The predictor and encoder are
// bidirectional GRU stacks followed by Gaussian heads; the decoder is a
// unidirectional GRU stack with a vocabulary-logit head.
struct NetSpec {
  int vocab = 0;    // |V| including the terminal symbol
  int m = 0;        // number of properties
  int z_dim = 0;
  int hidden = 0;
  int layers = 1;
  int max_len = 120;
};

// Log-variance heads are clamped to keep variances strictly positive and
// bounded under arbitrary finite parameters.
inline constexpr double kLogVarLo = -10.0;
inline constexpr double kLogVarHi = 10.0;

// ---------------------------------------------------------------------------
// Parameter layout
// ---------------------------------------------------------------------------

namespace detail {

inline void add_gru_layer(ParamStore& p, const std::string& prefix, int in,
                          int hidden) {
  for (const char* gate : {"Wz", "Wr", "Wh"}) {
    p.add(prefix + "." + gate, Tensor::zeros({in + hidden, hidden}));
  }
  for (const char* gate : {"bz", "br", "bh"}) {
    p.add(prefix + "." + gate, Tensor::zeros({hidden}));
  }
}

inline void add_bidi_stack(ParamStore& p, const std::string& prefix, int in,
                           int hidden, int layers) {
  for (int l = 0; l < layers; ++l) {
    const int layer_in = (l == 0) ? in : 2 * hidden;
    add_gru_layer(p, prefix + ".f." + std::to_string(l), layer_in, hidden);
    add_gru_layer(p, prefix + ".b." + std::to_string(l), layer_in, hidden);
  }
}

inline void add_head(ParamStore& p, const std::string& prefix, int in, int out) {
  p.add(prefix + ".Wm", Tensor::zeros({in, out}));
  p.add(prefix + ".bm", Tensor::zeros({out}));
  p.add(prefix + ".Wv", Tensor::zeros({in, out}));
  p.add(prefix + ".bv", Tensor::zeros({out}));
}

}  // namespace detail

inline ParamStore make_params(const NetSpec& s) {
  ParamStore p;
  detail::add_bidi_stack(p, "pred", s.vocab, s.hidden, s.layers);
  detail::add_head(p, "pred.head", 2 * s.hidden, s.m);
  detail::add_bidi_stack(p, "enc", s.vocab + s.m, s.hidden, s.layers);
  detail::add_head(p, "enc.head", 2 * s.hidden, s.z_dim);
  for (int l = 0; l < s.layers; ++l) {
    const int layer_in = (l == 0) ? s.vocab + s.m + s.z_dim : s.hidden;
    detail::add_gru_layer(p, "dec." + std::to_string(l), layer_in, s.hidden);
  }
  p.add("dec.out.W", Tensor::zeros({s.hidden, s.vocab}));
  p.add("dec.out.b", Tensor::zeros({s.vocab}));
  return p;
}

inline ParamStore init_params(const NetSpec& s, std::uint64_t seed) {
  ParamStore p = make_params(s);
  Rng rng(derive_seed(seed, "init"));
  ad::init_uniform_scaled(p, rng);
  return p;
}

inline Tensor one_hot_row(int vocab, int index) {
  Tensor t = Tensor::zeros({1, vocab});
  if (index >= 0) t.data[index] = 1.0;
  return t;  // index < 0 gives the all-zero begin-of-sequence input
}

// ---------------------------------------------------------------------------
// GRU cell and stacks (engine-generic)
// ---------------------------------------------------------------------------

template <class E>
struct GruRefs {
  typename E::Ref Wz, Wr, Wh, bz, br, bh;
};

template <class E>
GruRefs<E> gru_refs(E& e, const std::string& prefix) {
  return {e.param(prefix + ".Wz"), e.param(prefix + ".Wr"),
          e.param(prefix + ".Wh"), e.param(prefix + ".bz"),
          e.param(prefix + ".br"), e.param(prefix + ".bh")};
}

// z = sig(Wz [x;h] + bz); r = sig(Wr [x;h] + br);
// hcand = tanh(Wh [x; r.h] + bh); h' = (1-z).h + z.hcand
template <class E>
typename E::Ref gru_step(E& e, const GruRefs<E>& p, typename E::Ref h,
                         typename E::Ref x) {
  const auto xh = e.concat({x, h});
  const auto zg = e.sigmoid(e.add(e.matmul(xh, p.Wz), p.bz));
  const auto rg = e.sigmoid(e.add(e.matmul(xh, p.Wr), p.br));
  const auto cand = e.tanh(e.add(e.matmul(e.concat({x, e.mul(rg, h)}), p.Wh), p.bh));
  return e.add(e.mul(e.affine(zg, -1.0, 1.0), h), e.mul(zg, cand));
}

template <class E>
struct GaussianOut {
  typename E::Ref mean;    // [1 x d]
  typename E::Ref logvar;  // clamped
};

template <class E>
GaussianOut<E> gaussian_head(E& e, const std::string& prefix,
                             typename E::Ref features) {
  const auto mean = e.add(e.matmul(features, e.param(prefix + ".Wm")),
                          e.param(prefix + ".bm"));
  const auto logvar = e.clamp(e.add(e.matmul(features, e.param(prefix + ".Wv")),
                                    e.param(prefix + ".bv")),
                              kLogVarLo, kLogVarHi);
  return {mean, logvar};
}

// Runs a bidirectional stack over per-step inputs and returns the summary:
// concat(final forward state, final backward state) of the top layer.
template <class E>
typename E::Ref bidi_summary(E& e, const std::string& prefix, const NetSpec& s,
                             std::vector<typename E::Ref> inputs) {
  using Ref = typename E::Ref;
  const int T = static_cast<int>(inputs.size());
  Ref final_f{}, final_b{};
  for (int l = 0; l < s.layers; ++l) {
    const auto pf = gru_refs(e, prefix + ".f." + std::to_string(l));
    const auto pb = gru_refs(e, prefix + ".b." + std::to_string(l));
    const Ref h0 = e.constant(Tensor::zeros({1, s.hidden}));
    std::vector<Ref> fwd(T), bwd(T);
    Ref h = h0;
    for (int t = 0; t < T; ++t) {
      h = gru_step(e, pf, h, inputs[t]);
      fwd[t] = h;
    }
    final_f = h;
    h = h0;
    for (int t = T - 1; t >= 0; --t) {
      h = gru_step(e, pb, h, inputs[t]);
      bwd[t] = h;
    }
    final_b = h;
    if (l + 1 < s.layers) {
      for (int t = 0; t < T; ++t) inputs[t] = e.concat({fwd[t], bwd[t]});
    }
  }
  return e.concat({final_f, final_b});
}

// ---------------------------------------------------------------------------
// The three networks
// ---------------------------------------------------------------------------

// q(y|x): bidirectional stack over one-hot tokens (terminal included).
template <class E>
GaussianOut<E> predictor_forward(E& e, const NetSpec& s, const TokenSequence& x) {
  std::vector<typename E::Ref> inputs;
  inputs.reserve(x.indices.size());
  for (int idx : x.indices) inputs.push_back(e.constant(one_hot_row(s.vocab, idx)));
  return gaussian_head(e, "pred.head", bidi_summary(e, "pred", s, std::move(inputs)));
}

// q(z|x,y): per-step input is one-hot(x_t) ++ y.
template <class E>
GaussianOut<E> encoder_forward(E& e, const NetSpec& s, const TokenSequence& x,
                               typename E::Ref y) {
  std::vector<typename E::Ref> inputs;
  inputs.reserve(x.indices.size());
  for (int idx : x.indices) {
    inputs.push_back(e.concat({e.constant(one_hot_row(s.vocab, idx)), y}));
  }
  return gaussian_head(e, "enc.head", bidi_summary(e, "enc", s, std::move(inputs)));
}

// p(x|y,z) with teacher forcing: step 1 consumes the all-zero BOS input,
// step j+1 consumes one-hot(teacher_j) ++ y ++ z. Returns one logit row per
// teacher position (so the terminal is predicted too).
template <class E>
std::vector<typename E::Ref> decoder_forward(E& e, const NetSpec& s,
                                             typename E::Ref y, typename E::Ref z,
                                             const TokenSequence& teacher) {
  using Ref = typename E::Ref;
  const int T = teacher.length();
  std::vector<GruRefs<E>> layers;
  layers.reserve(s.layers);
  for (int l = 0; l < s.layers; ++l) {
    layers.push_back(gru_refs(e, "dec." + std::to_string(l)));
  }
  const Ref Wout = e.param("dec.out.W");
  const Ref bout = e.param("dec.out.b");
  std::vector<Ref> h(s.layers, e.constant(Tensor::zeros({1, s.hidden})));
  std::vector<Ref> logits;
  logits.reserve(T);
  for (int t = 0; t < T; ++t) {
    const int prev = (t == 0) ? -1 : teacher.indices[t - 1];
    Ref x = e.concat({e.constant(one_hot_row(s.vocab, prev)), y, z});
    for (int l = 0; l < s.layers; ++l) {
      h[l] = gru_step(e, layers[l], h[l], x);
      x = h[l];
    }
    logits.push_back(e.add(e.matmul(h[s.layers - 1], Wout), bout));
  }
  return logits;
}

// mean + exp(0.5 logvar) * noise, differentiable through mean and logvar.
template <class E>
typename E::Ref reparam_sample(E& e, const GaussianOut<E>& g,
                               const std::vector<double>& noise) {
  const auto eps = e.constant(Tensor::row(noise));
  return e.add(g.mean, e.mul(e.exp(e.affine(g.logvar, 0.5, 0.0)), eps));
}

// Value-level reparameterization (mu, sigma^2, standard-normal draw).
inline std::vector<double> reparameterized_sample(const std::vector<double>& mu,
                                                  const std::vector<double>& var,
                                                  const std::vector<double>& noise) {
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out[i] = mu[i] + std::sqrt(var[i]) * noise[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Value-level inference helpers
// ---------------------------------------------------------------------------

struct GaussianMoments {
  std::vector<double> mean, var;
};

inline GaussianMoments moments_from(const ad::EvalEngine& e,
                                    const GaussianOut<ad::EvalEngine>& g) {
  GaussianMoments out;
  out.mean = e.val(g.mean).data;
  for (double lv : e.val(g.logvar).data) out.var.push_back(std::exp(lv));
  return out;
}

inline GaussianMoments predictor_moments(const NetSpec& s, const ParamStore& p,
                                         const TokenSequence& x) {
  ad::EvalEngine e(p);
  return moments_from(e, predictor_forward(e, s, x));
}

inline GaussianMoments encoder_moments(const NetSpec& s, const ParamStore& p,
                                       const TokenSequence& x,
                                       const std::vector<double>& y) {
  ad::EvalEngine e(p);
  return moments_from(e, encoder_forward(e, s, x, e.constant(Tensor::row(y))));
}

// Incremental decoder over frozen parameters, used by beam search and the
// step-distribution query. States own their tensors, so many hypotheses can
// be advanced independently.
class DecoderSession {
 public:
  DecoderSession(const NetSpec& spec, const ParamStore& params,
                 std::vector<double> y, std::vector<double> z)
      : spec_(spec), params_(params), y_(std::move(y)), z_(std::move(z)) {}

  struct State {
    std::vector<Tensor> h;  // per layer, [1 x hidden]
  };

  // State after consuming the BOS input.
  State start() const { return advance_impl(nullptr, -1); }

  // State after additionally consuming `token`.
  State advance(const State& st, int token) const { return advance_impl(&st, token); }

  // Log-probabilities of the next token given the state.
  std::vector<double> log_probs(const State& st) const {
    ad::EvalEngine e(params_);
    const auto top = e.constant(st.h.back());
    const auto logits = e.add(e.matmul(top, e.param("dec.out.W")), e.param("dec.out.b"));
    return e.val(e.log_softmax(logits)).data;
  }

  const NetSpec& spec() const { return spec_; }

 private:
  State advance_impl(const State* st, int token) const {
    ad::EvalEngine e(params_);
    using Ref = ad::EvalEngine::Ref;
    Ref x = e.concat({e.constant(one_hot_row(spec_.vocab, token)),
                      e.constant(Tensor::row(y_)), e.constant(Tensor::row(z_))});
    State out;
    out.h.reserve(spec_.layers);
    for (int l = 0; l < spec_.layers; ++l) {
      const auto refs = gru_refs(e, "dec." + std::to_string(l));
      const Ref h_prev = st ? e.constant(st->h[l])
                            : e.constant(Tensor::zeros({1, spec_.hidden}));
      const Ref h = gru_step(e, refs, h_prev, x);
      out.h.push_back(e.val(h));
      x = h;
    }
    return out;
  }

  NetSpec spec_;
  const ParamStore& params_;
  std::vector<double> y_, z_;
};

// Next-token log-probabilities after a prefix (empty prefix allowed);
// consistent with decoder_forward teacher forcing over the same tokens.
inline std::vector<double> decoder_step_distribution(const NetSpec& s,
                                                     const ParamStore& p,
                                                     const std::vector<double>& y,
                                                     const std::vector<double>& z,
                                                     const std::vector<int>& prefix) {
  DecoderSession session(s, p, y, z);
  DecoderSession::State st = session.start();
  for (int tok : prefix) st = session.advance(st, tok);
  return session.log_probs(st);
}

}  // namespace molvae::nets

#endif  // MOLVAE_NETS_HPP
