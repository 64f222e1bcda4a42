//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_TENSOR_HPP
#define MOLVAE_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace molvae::ad {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major tensor of 64-bit floats. Everything in this project is
// small enough that plain vectors and scalar loops are adequate.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {}

  static std::int64_t numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int> shape) {
    auto n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
  }

  static Tensor full(std::vector<int> shape, double v) {
    auto n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, v));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor({1, n}, std::move(values));
  }

  static Tensor vec(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor({n}, std::move(values));
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int last_dim() const { return shape.empty() ? 1 : shape.back(); }
  std::int64_t leading() const {
    return shape.empty() ? 1 : size() / shape.back();
  }
  double item() const {
    if (data.size() != 1) throw ShapeError("item() on non-scalar tensor");
    return data[0];
  }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// ---------------------------------------------------------------------------
// Kernels. Shared between the recording tape and the immediate evaluator so
// both produce bit-identical values.
// ---------------------------------------------------------------------------
namespace kern {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul needs 2-d operands");
  require(a.shape[1] == b.shape[0],
          "matmul inner dims " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  const int r = a.shape[0], k = a.shape[1], c = b.shape[1];
  Tensor out = Tensor::zeros({r, c});
  for (int i = 0; i < r; ++i) {
    const double* arow = &a.data[static_cast<std::size_t>(i) * k];
    double* orow = &out.data[static_cast<std::size_t>(i) * c];
    for (int j = 0; j < k; ++j) {
      const double av = arow[j];
      if (av == 0.0) continue;
      const double* brow = &b.data[static_cast<std::size_t>(j) * c];
      for (int x = 0; x < c; ++x) orow[x] += av * brow[x];
    }
  }
  return out;
}

// b must either match a's shape or be a suffix of it (broadcast over the
// leading dimensions, e.g. bias add).
inline Tensor add(const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
  }
  require(b.rank() <= a.rank(), "add: rhs rank exceeds lhs");
  const int br = b.rank();
  for (int i = 0; i < br; ++i) {
    require(b.shape[i] == a.shape[a.rank() - br + i],
            "add: shapes " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  }
  Tensor out = a;
  const std::size_t block = static_cast<std::size_t>(b.size());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] += b.data[i % block];
  }
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "mul: shapes " + shape_str(a.shape) + " vs " +
                               shape_str(b.shape));
  Tensor out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

template <typename F>
inline Tensor map(const Tensor& a, F f) {
  Tensor out = a;
  for (auto& v : out.data) v = f(v);
  return out;
}

inline Tensor concat_last(const std::vector<const Tensor*>& parts) {
  require(!parts.empty(), "concat of nothing");
  const int rank = parts[0]->rank();
  std::int64_t lead = parts[0]->leading();
  int total = 0;
  for (const Tensor* p : parts) {
    require(p->rank() == rank && p->leading() == lead,
            "concat: incompatible leading dims");
    total += p->last_dim();
  }
  std::vector<int> shape = parts[0]->shape;
  shape.back() = total;
  Tensor out = Tensor::zeros(shape);
  for (std::int64_t r = 0; r < lead; ++r) {
    double* dst = &out.data[r * total];
    for (const Tensor* p : parts) {
      const int w = p->last_dim();
      const double* src = &p->data[r * w];
      for (int i = 0; i < w; ++i) *dst++ = src[i];
    }
  }
  return out;
}

inline Tensor slice_last(const Tensor& a, int from, int to) {
  require(0 <= from && from < to && to <= a.last_dim(), "slice bounds");
  const int w = a.last_dim(), nw = to - from;
  std::vector<int> shape = a.shape;
  shape.back() = nw;
  Tensor out = Tensor::zeros(shape);
  for (std::int64_t r = 0; r < a.leading(); ++r) {
    for (int i = 0; i < nw; ++i) out.data[r * nw + i] = a.data[r * w + from + i];
  }
  return out;
}

inline Tensor softmax_last(const Tensor& a, bool log_form) {
  Tensor out = a;
  const int w = a.last_dim();
  require(w >= 1, "softmax on empty dim");
  for (std::int64_t r = 0; r < a.leading(); ++r) {
    double* row = &out.data[r * w];
    double mx = row[0];
    for (int i = 1; i < w; ++i) mx = std::max(mx, row[i]);
    double sum = 0.0;
    for (int i = 0; i < w; ++i) sum += std::exp(row[i] - mx);
    if (log_form) {
      const double lse = mx + std::log(sum);
      for (int i = 0; i < w; ++i) row[i] -= lse;
    } else {
      for (int i = 0; i < w; ++i) row[i] = std::exp(row[i] - mx) / sum;
    }
  }
  return out;
}

inline Tensor reduce_all(const Tensor& a, bool mean) {
  double s = 0.0;
  for (double v : a.data) s += v;
  if (mean && !a.data.empty()) s /= static_cast<double>(a.data.size());
  return Tensor::scalar(s);
}

}  // namespace kern

}  // namespace molvae::ad

#endif  // MOLVAE_TENSOR_HPP
