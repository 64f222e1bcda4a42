//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_OPTIM_HPP
#define MOLVAE_OPTIM_HPP

#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "molvae/rng.hpp"
#include "molvae/tape.hpp"
#include "molvae/tensor.hpp"

namespace molvae::ad {

// Ordered, named parameter tensors. The order is the canonical order for
// gradient vectors, Adam moments and checkpoint blobs.
class ParamStore {
 public:
  int add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw std::runtime_error("duplicate param " + name);
    index_[name] = static_cast<int>(names_.size());
    names_.push_back(name);
    values_.push_back(std::move(t));
    return static_cast<int>(names_.size()) - 1;
  }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::runtime_error("no param " + name);
    return it->second;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  int count() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_[i]; }
  const Tensor& value(int i) const { return values_[i]; }
  Tensor& value(int i) { return values_[i]; }
  const Tensor& value(const std::string& n) const { return values_[find(n)]; }
  Tensor& value(const std::string& n) { return values_[find(n)]; }

  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (const auto& t : values_) n += t.size();
    return n;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, int> index_;
};

// One gradient tensor per parameter, aligned with ParamStore order.
using GradVector = std::vector<Tensor>;

inline GradVector zero_grads(const ParamStore& params) {
  GradVector g;
  g.reserve(params.count());
  for (int i = 0; i < params.count(); ++i) {
    g.push_back(Tensor::zeros(params.value(i).shape));
  }
  return g;
}

inline void accumulate_grads(GradVector& into, const GradVector& from) {
  for (std::size_t i = 0; i < into.size(); ++i) {
    for (std::size_t j = 0; j < into[i].data.size(); ++j) {
      into[i].data[j] += from[i].data[j];
    }
  }
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected Adam.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const ParamStore& params, AdamConfig cfg) : cfg_(cfg) {
    m_ = zero_grads(params);
    v_ = zero_grads(params);
  }

  long step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  void step(ParamStore& params, const GradVector& grads) {
    if (static_cast<int>(grads.size()) != params.count()) {
      throw ShapeError("adam: gradient count mismatch");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (int p = 0; p < params.count(); ++p) {
      Tensor& w = params.value(p);
      const Tensor& g = grads[p];
      if (!w.same_shape(g)) throw ShapeError("adam: shape mismatch at " + params.name(p));
      for (std::size_t i = 0; i < w.data.size(); ++i) {
        const double gi = g.data[i];
        m_[p].data[i] = cfg_.beta1 * m_[p].data[i] + (1.0 - cfg_.beta1) * gi;
        v_[p].data[i] = cfg_.beta2 * v_[p].data[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double mhat = m_[p].data[i] / bc1;
        const double vhat = v_[p].data[i] / bc2;
        w.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

 private:
  AdamConfig cfg_;
  long step_ = 0;
  GradVector m_, v_;
};

// Scaled uniform init for matrices, zero biases (rank-1 tensors).
inline void init_uniform_scaled(ParamStore& params, Rng& rng) {
  for (int p = 0; p < params.count(); ++p) {
    Tensor& t = params.value(p);
    if (t.rank() == 2) {
      const double a = std::sqrt(6.0 / (t.shape[0] + t.shape[1]));
      for (auto& v : t.data) v = rng.uniform(-a, a);
    } else {
      for (auto& v : t.data) v = 0.0;
    }
  }
}

// ---------------------------------------------------------------------------
// Engines. Network code is written once as templates over an engine; the
// TapeEngine records for backward, the EvalEngine computes values directly
// through the same kernels, so both paths are numerically identical.
// ---------------------------------------------------------------------------

class TapeEngine {
 public:
  using Ref = Tape::Ref;

  TapeEngine(Tape& tape, const ParamStore& params)
      : tape_(tape), params_(params), leaf_of_(params.count(), -1) {}

  Ref param(const std::string& name) {
    const int idx = params_.find(name);
    if (leaf_of_[idx] < 0) leaf_of_[idx] = tape_.leaf(params_.value(idx));
    return leaf_of_[idx];
  }

  Ref constant(Tensor t) { return tape_.constant(std::move(t)); }
  const Tensor& val(Ref r) const { return tape_.value(r); }
  Tape& tape() { return tape_; }

  Ref matmul(Ref a, Ref b) { return tape_.matmul(a, b); }
  Ref add(Ref a, Ref b) { return tape_.add(a, b); }
  Ref add_n(const std::vector<Ref>& xs) { return tape_.add_n(xs); }
  Ref sub(Ref a, Ref b) { return tape_.sub(a, b); }
  Ref mul(Ref a, Ref b) { return tape_.mul(a, b); }
  Ref affine(Ref a, double al, double be) { return tape_.affine(a, al, be); }
  Ref sigmoid(Ref a) { return tape_.sigmoid(a); }
  Ref tanh(Ref a) { return tape_.tanh(a); }
  Ref exp(Ref a) { return tape_.exp(a); }
  Ref log(Ref a) { return tape_.log(a); }
  Ref square(Ref a) { return tape_.square(a); }
  Ref clamp(Ref a, double lo, double hi) { return tape_.clamp(a, lo, hi); }
  Ref softmax(Ref a) { return tape_.softmax(a); }
  Ref log_softmax(Ref a) { return tape_.log_softmax(a); }
  Ref concat(const std::vector<Ref>& xs) { return tape_.concat(xs); }
  Ref slice(Ref a, int f, int t) { return tape_.slice(a, f, t); }
  Ref sum(Ref a) { return tape_.sum(a); }
  Ref mean(Ref a) { return tape_.mean(a); }

  // Gradients per parameter after tape().backward(); zeros for parameters
  // the graph never touched.
  GradVector collect_grads() const {
    GradVector g;
    g.reserve(params_.count());
    for (int i = 0; i < params_.count(); ++i) {
      if (leaf_of_[i] < 0) {
        g.push_back(Tensor::zeros(params_.value(i).shape));
      } else {
        g.push_back(tape_.grad(leaf_of_[i]));
      }
    }
    return g;
  }

 private:
  Tape& tape_;
  const ParamStore& params_;
  std::vector<Ref> leaf_of_;
};

class EvalEngine {
 public:
  using Ref = const Tensor*;

  explicit EvalEngine(const ParamStore& params) : params_(params) {}

  Ref param(const std::string& name) { return &params_.value(name); }
  Ref constant(Tensor t) { return store(std::move(t)); }
  const Tensor& val(Ref r) const { return *r; }

  Ref matmul(Ref a, Ref b) { return store(kern::matmul(*a, *b)); }
  Ref add(Ref a, Ref b) { return store(kern::add(*a, *b)); }
  Ref add_n(const std::vector<Ref>& xs) {
    if (xs.empty()) return store(Tensor::scalar(0.0));
    Tensor v = *xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i) {
      for (std::size_t j = 0; j < v.data.size(); ++j) v.data[j] += xs[i]->data[j];
    }
    return store(std::move(v));
  }
  Ref sub(Ref a, Ref b) { return add(a, affine(b, -1.0, 0.0)); }
  Ref mul(Ref a, Ref b) { return store(kern::mul(*a, *b)); }
  Ref affine(Ref a, double al, double be) {
    return store(kern::map(*a, [=](double v) { return al * v + be; }));
  }
  Ref sigmoid(Ref a) {
    return store(kern::map(*a, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }));
  }
  Ref tanh(Ref a) {
    return store(kern::map(*a, [](double v) { return std::tanh(v); }));
  }
  Ref exp(Ref a) {
    return store(kern::map(*a, [](double v) { return std::exp(v); }));
  }
  Ref log(Ref a) {
    return store(kern::map(*a, [](double v) { return std::log(v); }));
  }
  Ref square(Ref a) {
    return store(kern::map(*a, [](double v) { return v * v; }));
  }
  Ref clamp(Ref a, double lo, double hi) {
    return store(kern::map(*a, [=](double v) { return v < lo ? lo : (v > hi ? hi : v); }));
  }
  Ref softmax(Ref a) { return store(kern::softmax_last(*a, false)); }
  Ref log_softmax(Ref a) { return store(kern::softmax_last(*a, true)); }
  Ref concat(const std::vector<Ref>& xs) {
    std::vector<const Tensor*> parts(xs.begin(), xs.end());
    return store(kern::concat_last(parts));
  }
  Ref slice(Ref a, int f, int t) { return store(kern::slice_last(*a, f, t)); }
  Ref sum(Ref a) { return store(kern::reduce_all(*a, false)); }
  Ref mean(Ref a) { return store(kern::reduce_all(*a, true)); }

  // Frees intermediate results; parameter refs stay valid.
  void reset() { arena_.clear(); }

 private:
  Ref store(Tensor t) {
    if (!t.all_finite()) throw NonFiniteError("non-finite value in evaluation");
    arena_.push_back(std::move(t));
    return &arena_.back();
  }

  const ParamStore& params_;
  std::deque<Tensor> arena_;
};

}  // namespace molvae::ad

#endif  // MOLVAE_OPTIM_HPP
