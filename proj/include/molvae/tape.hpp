//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_TAPE_HPP
#define MOLVAE_TAPE_HPP

#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "molvae/tensor.hpp"

namespace molvae::ad {

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order by construction; backward() walks the records in
// reverse, so every node is visited exactly once and repeated uses of a
// value sum their gradient contributions.
class Tape {
 public:
  using Ref = int;

  Ref constant(Tensor t) { return push("constant", std::move(t), false, {}); }

  // A differentiable input (parameter). Gradient is collected after
  // backward() via grad().
  Ref leaf(Tensor t) { return push("leaf", std::move(t), true, {}); }

  const Tensor& value(Ref r) const { return nodes_[r].value; }

  // Zero-shaped gradient for untouched nodes ("unused parameter" case).
  Tensor grad(Ref r) const {
    const Node& n = nodes_[r];
    if (n.grad.data.empty()) return Tensor::zeros(n.value.shape);
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  // --- primitives -----------------------------------------------------

  Ref matmul(Ref a, Ref b) {
    Ref out = push("matmul", kern::matmul(value(a), value(b)), needs(a, b),
                   [this, a, b](Ref o) {
                     const Tensor& g = nodes_[o].grad;
                     const Tensor& av = value(a);
                     const Tensor& bv = value(b);
                     const int r = av.shape[0], k = av.shape[1], c = bv.shape[1];
                     if (nodes_[a].needs_grad) {
                       Tensor da = Tensor::zeros(av.shape);
                       for (int i = 0; i < r; ++i) {
                         for (int j = 0; j < k; ++j) {
                           double s = 0.0;
                           const double* grow = &g.data[std::size_t(i) * c];
                           const double* brow = &bv.data[std::size_t(j) * c];
                           for (int x = 0; x < c; ++x) s += grow[x] * brow[x];
                           da.data[std::size_t(i) * k + j] = s;
                         }
                       }
                       accumulate(a, da);
                     }
                     if (nodes_[b].needs_grad) {
                       Tensor db = Tensor::zeros(bv.shape);
                       for (int i = 0; i < r; ++i) {
                         const double* arow = &av.data[std::size_t(i) * k];
                         const double* grow = &g.data[std::size_t(i) * c];
                         for (int j = 0; j < k; ++j) {
                           const double aij = arow[j];
                           if (aij == 0.0) continue;
                           double* drow = &db.data[std::size_t(j) * c];
                           for (int x = 0; x < c; ++x) drow[x] += aij * grow[x];
                         }
                       }
                       accumulate(b, db);
                     }
                   });
    return out;
  }

  Ref add(Ref a, Ref b) {
    return push("add", kern::add(value(a), value(b)), needs(a, b),
                [this, a, b](Ref o) {
                  const Tensor& g = nodes_[o].grad;
                  if (nodes_[a].needs_grad) accumulate(a, g);
                  if (nodes_[b].needs_grad) {
                    const Tensor& bv = value(b);
                    if (bv.same_shape(g)) {
                      accumulate(b, g);
                    } else {
                      Tensor db = Tensor::zeros(bv.shape);
                      const std::size_t block = db.data.size();
                      for (std::size_t i = 0; i < g.data.size(); ++i) {
                        db.data[i % block] += g.data[i];
                      }
                      accumulate(b, db);
                    }
                  }
                });
  }

  Ref add_n(const std::vector<Ref>& xs) {
    if (xs.empty()) return constant(Tensor::scalar(0.0));
    Tensor v = value(xs[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) {
      kern::require(value(xs[i]).same_shape(v), "add_n: shape mismatch");
      for (std::size_t j = 0; j < v.data.size(); ++j) {
        v.data[j] += value(xs[i]).data[j];
      }
    }
    bool ng = false;
    for (Ref x : xs) ng |= nodes_[x].needs_grad;
    return push("add_n", std::move(v), ng, [this, xs](Ref o) {
      const Tensor& g = nodes_[o].grad;
      for (Ref x : xs) {
        if (nodes_[x].needs_grad) accumulate(x, g);
      }
    });
  }

  Ref sub(Ref a, Ref b) { return add(a, affine(b, -1.0, 0.0)); }

  Ref mul(Ref a, Ref b) {
    return push("mul", kern::mul(value(a), value(b)), needs(a, b),
                [this, a, b](Ref o) {
                  const Tensor& g = nodes_[o].grad;
                  if (nodes_[a].needs_grad) accumulate(a, kern::mul(g, value(b)));
                  if (nodes_[b].needs_grad) accumulate(b, kern::mul(g, value(a)));
                });
  }

  // alpha * x + beta, elementwise
  Ref affine(Ref a, double alpha, double beta) {
    return push("affine",
                kern::map(value(a), [=](double v) { return alpha * v + beta; }),
                needs(a), [this, a, alpha](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  accumulate(a, kern::map(nodes_[o].grad,
                                          [=](double v) { return alpha * v; }));
                });
  }

  Ref sigmoid(Ref a) {
    return push("sigmoid",
                kern::map(value(a),
                          [](double v) { return 1.0 / (1.0 + std::exp(-v)); }),
                needs(a), [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  const Tensor& s = value(o);
                  Tensor d = nodes_[o].grad;
                  for (std::size_t i = 0; i < d.data.size(); ++i) {
                    d.data[i] *= s.data[i] * (1.0 - s.data[i]);
                  }
                  accumulate(a, d);
                });
  }

  Ref tanh(Ref a) {
    return push("tanh", kern::map(value(a), [](double v) { return std::tanh(v); }),
                needs(a), [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  const Tensor& t = value(o);
                  Tensor d = nodes_[o].grad;
                  for (std::size_t i = 0; i < d.data.size(); ++i) {
                    d.data[i] *= 1.0 - t.data[i] * t.data[i];
                  }
                  accumulate(a, d);
                });
  }

  Ref exp(Ref a) {
    return push("exp", kern::map(value(a), [](double v) { return std::exp(v); }),
                needs(a), [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  accumulate(a, kern::mul(nodes_[o].grad, value(o)));
                });
  }

  Ref log(Ref a) {
    return push("log", kern::map(value(a), [](double v) { return std::log(v); }),
                needs(a), [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  Tensor d = nodes_[o].grad;
                  const Tensor& x = value(a);
                  for (std::size_t i = 0; i < d.data.size(); ++i) {
                    d.data[i] /= x.data[i];
                  }
                  accumulate(a, d);
                });
  }

  Ref square(Ref a) {
    return push("square", kern::map(value(a), [](double v) { return v * v; }),
                needs(a), [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  Tensor d = nodes_[o].grad;
                  const Tensor& x = value(a);
                  for (std::size_t i = 0; i < d.data.size(); ++i) {
                    d.data[i] *= 2.0 * x.data[i];
                  }
                  accumulate(a, d);
                });
  }

  // Pass-through gradient inside the interval, zero outside.
  Ref clamp(Ref a, double lo, double hi) {
    return push("clamp",
                kern::map(value(a),
                          [=](double v) { return v < lo ? lo : (v > hi ? hi : v); }),
                needs(a), [this, a, lo, hi](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  Tensor d = nodes_[o].grad;
                  const Tensor& x = value(a);
                  for (std::size_t i = 0; i < d.data.size(); ++i) {
                    if (x.data[i] < lo || x.data[i] > hi) d.data[i] = 0.0;
                  }
                  accumulate(a, d);
                });
  }

  Ref softmax(Ref a) {
    return push("softmax", kern::softmax_last(value(a), false), needs(a),
                [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  const Tensor& s = value(o);
                  const Tensor& g = nodes_[o].grad;
                  Tensor d = g;
                  const int w = s.last_dim();
                  for (std::int64_t r = 0; r < s.leading(); ++r) {
                    const double* srow = &s.data[r * w];
                    const double* grow = &g.data[r * w];
                    double dot = 0.0;
                    for (int i = 0; i < w; ++i) dot += srow[i] * grow[i];
                    double* drow = &d.data[r * w];
                    for (int i = 0; i < w; ++i) drow[i] = srow[i] * (grow[i] - dot);
                  }
                  accumulate(a, d);
                });
  }

  Ref log_softmax(Ref a) {
    return push("log_softmax", kern::softmax_last(value(a), true), needs(a),
                [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  const Tensor& lp = value(o);
                  const Tensor& g = nodes_[o].grad;
                  Tensor d = g;
                  const int w = lp.last_dim();
                  for (std::int64_t r = 0; r < lp.leading(); ++r) {
                    const double* lrow = &lp.data[r * w];
                    const double* grow = &g.data[r * w];
                    double gsum = 0.0;
                    for (int i = 0; i < w; ++i) gsum += grow[i];
                    double* drow = &d.data[r * w];
                    for (int i = 0; i < w; ++i) {
                      drow[i] = grow[i] - std::exp(lrow[i]) * gsum;
                    }
                  }
                  accumulate(a, d);
                });
  }

  Ref concat(const std::vector<Ref>& xs) {
    std::vector<const Tensor*> parts;
    parts.reserve(xs.size());
    for (Ref x : xs) parts.push_back(&value(x));
    bool ng = false;
    for (Ref x : xs) ng |= nodes_[x].needs_grad;
    return push("concat", kern::concat_last(parts), ng, [this, xs](Ref o) {
      const Tensor& g = nodes_[o].grad;
      int from = 0;
      for (Ref x : xs) {
        const int w = value(x).last_dim();
        if (nodes_[x].needs_grad) {
          accumulate(x, kern::slice_last(g, from, from + w));
        }
        from += w;
      }
    });
  }

  Ref slice(Ref a, int from, int to) {
    return push("slice", kern::slice_last(value(a), from, to), needs(a),
                [this, a, from, to](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  const Tensor& g = nodes_[o].grad;
                  const Tensor& x = value(a);
                  Tensor d = Tensor::zeros(x.shape);
                  const int w = x.last_dim(), nw = to - from;
                  for (std::int64_t r = 0; r < x.leading(); ++r) {
                    for (int i = 0; i < nw; ++i) {
                      d.data[r * w + from + i] = g.data[r * nw + i];
                    }
                  }
                  accumulate(a, d);
                });
  }

  Ref sum(Ref a) {
    return push("sum", kern::reduce_all(value(a), false), needs(a),
                [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  const double g = nodes_[o].grad.data[0];
                  accumulate(a, Tensor::full(value(a).shape, g));
                });
  }

  Ref mean(Ref a) {
    return push("mean", kern::reduce_all(value(a), true), needs(a),
                [this, a](Ref o) {
                  if (!nodes_[a].needs_grad) return;
                  const double g = nodes_[o].grad.data[0];
                  const double n = static_cast<double>(value(a).size());
                  accumulate(a, Tensor::full(value(a).shape, g / n));
                });
  }

  // --- backward ---------------------------------------------------------

  // Seeds d(out)/d(out) = 1 and propagates to every reachable leaf.
  void backward(Ref out) {
    if (value(out).size() != 1) {
      throw ShapeError("backward() requires a scalar output");
    }
    nodes_[out].grad = Tensor::scalar(1.0);
    for (Ref i = out; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.data.empty()) continue;
      if (!n.grad.all_finite()) {
        throw NonFiniteError("non-finite gradient at node " + std::to_string(i) +
                             " (" + n.op + ")");
      }
      if (n.back) n.back(i);
    }
  }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;  // lazily allocated
    bool needs_grad = false;
    std::function<void(Ref)> back;
  };

  bool needs(Ref a) const { return nodes_[a].needs_grad; }
  bool needs(Ref a, Ref b) const {
    return nodes_[a].needs_grad || nodes_[b].needs_grad;
  }

  Ref push(const char* op, Tensor v, bool needs_grad,
           std::function<void(Ref)> back) {
    if (!v.all_finite()) {
      throw NonFiniteError(std::string("non-finite value from op ") + op +
                           " at node " + std::to_string(nodes_.size()));
    }
    nodes_.push_back(Node{op, std::move(v), Tensor{}, needs_grad,
                          needs_grad ? std::move(back) : nullptr});
    return static_cast<Ref>(nodes_.size()) - 1;
  }

  void accumulate(Ref r, const Tensor& contribution) {
    Node& n = nodes_[r];
    if (n.grad.data.empty()) {
      n.grad = contribution;
      return;
    }
    for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
      n.grad.data[i] += contribution.data[i];
    }
  }

  // deque: value() references stay valid while ops keep being recorded
  std::deque<Node> nodes_;
};

}  // namespace molvae::ad

#endif  // MOLVAE_TAPE_HPP
