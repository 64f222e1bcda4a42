//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_GAUSSIAN_HPP
#define MOLVAE_GAUSSIAN_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "molvae/rng.hpp"

namespace molvae {

struct NotPositiveDefiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneratePriorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Small dense square matrix, row-major. Dimensions here are the number of
// properties (single digits), so simple O(n^3) routines are plenty.
struct Mat {
  int n = 0;
  std::vector<double> a;

  Mat() = default;
  explicit Mat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * n + c]; }

  static Mat identity(int dim) {
    Mat m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
  }

  bool symmetric(double tol = 1e-12) const {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (std::abs(at(i, j) - at(j, i)) > tol) return false;
      }
    }
    return true;
  }
};

// Lower-triangular Cholesky factor; nullopt when the matrix is not positive
// definite.
inline std::optional<Mat> cholesky(const Mat& m) {
  Mat L(m.n);
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m.at(i, j);
      for (int k = 0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return std::nullopt;
        L.at(i, i) = std::sqrt(s);
      } else {
        L.at(i, j) = s / L.at(j, j);
      }
    }
  }
  return L;
}

// Solves A x = b given the Cholesky factor L (A = L L^T).
inline std::vector<double> chol_solve(const Mat& L, const std::vector<double>& b) {
  const int n = L.n;
  std::vector<double> y(n), x(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= L.at(i, k) * y[k];
    y[i] = s / L.at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= L.at(k, i) * x[k];
    x[i] = s / L.at(i, i);
  }
  return x;
}

inline Mat chol_inverse(const Mat& L) {
  const int n = L.n;
  Mat inv(n);
  std::vector<double> e(n, 0.0);
  for (int c = 0; c < n; ++c) {
    e.assign(n, 0.0);
    e[c] = 1.0;
    auto col = chol_solve(L, e);
    for (int r = 0; r < n; ++r) inv.at(r, c) = col[r];
  }
  return inv;
}

inline double chol_log_det(const Mat& L) {
  double s = 0.0;
  for (int i = 0; i < L.n; ++i) s += std::log(L.at(i, i));
  return 2.0 * s;
}

// ---------------------------------------------------------------------------
// GaussianPrior: N(mu_y, Sigma_y) over the (normalized) property vector.
// ---------------------------------------------------------------------------

class GaussianPrior {
 public:
  GaussianPrior() = default;

  GaussianPrior(std::vector<double> mean, Mat cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (static_cast<int>(mean_.size()) != cov_.n) {
      throw std::invalid_argument("prior mean/covariance dimension mismatch");
    }
    if (!cov_.symmetric()) {
      throw NotPositiveDefiniteError("covariance is not symmetric");
    }
    auto L = cholesky(cov_);
    if (!L) throw NotPositiveDefiniteError("covariance is not positive definite");
    chol_ = *L;
    inv_ = chol_inverse(chol_);
    log_det_ = chol_log_det(chol_);
  }

  // Sample mean and population covariance of the labeled property vectors;
  // a 1e-9 jitter is added once if the covariance is not positive definite.
  static GaussianPrior fit(const std::vector<std::vector<double>>& ys) {
    if (ys.empty()) throw DegeneratePriorError("no labeled examples to fit prior");
    const int m = static_cast<int>(ys[0].size());
    if (static_cast<int>(ys.size()) < m + 1) {
      throw DegeneratePriorError("need at least m+1 labeled examples to fit prior");
    }
    std::vector<double> mean(m, 0.0);
    for (const auto& y : ys) {
      for (int i = 0; i < m; ++i) mean[i] += y[i];
    }
    for (auto& v : mean) v /= static_cast<double>(ys.size());
    Mat cov(m);
    for (const auto& y : ys) {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          cov.at(i, j) += (y[i] - mean[i]) * (y[j] - mean[j]);
        }
      }
    }
    for (auto& v : cov.a) v /= static_cast<double>(ys.size());
    for (int i = 0; i < m; ++i) {
      // a constant property cannot be rescued by jitter
      if (cov.at(i, i) == 0.0) {
        throw DegeneratePriorError("labeled property " + std::to_string(i) +
                                   " is constant");
      }
    }
    if (!cholesky(cov)) {
      for (int i = 0; i < m; ++i) cov.at(i, i) += 1e-9;
      if (!cholesky(cov)) {
        throw DegeneratePriorError("labeled covariance is singular");
      }
    }
    return GaussianPrior(std::move(mean), std::move(cov));
  }

  int dim() const { return cov_.n; }
  const std::vector<double>& mean() const { return mean_; }
  const Mat& cov() const { return cov_; }
  const Mat& inverse() const { return inv_; }
  const Mat& chol() const { return chol_; }
  double log_det() const { return log_det_; }

  double log_pdf(const std::vector<double>& y) const {
    const int m = dim();
    std::vector<double> d(m);
    for (int i = 0; i < m; ++i) d[i] = y[i] - mean_[i];
    double q = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) q += d[i] * inv_.at(i, j) * d[j];
    }
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    return -0.5 * (m * kLog2Pi + log_det_ + q);
  }

  std::vector<double> sample(Rng& rng) const {
    const int m = dim();
    std::vector<double> eps = rng.normal_vec(m), out(mean_);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) out[i] += chol_.at(i, j) * eps[j];
    }
    return out;
  }

 private:
  std::vector<double> mean_;
  Mat cov_, chol_, inv_;
  double log_det_ = 0.0;
};

// ---------------------------------------------------------------------------
// Conditioning
// ---------------------------------------------------------------------------

// The Gaussian over the free indices given the fixed ones:
//   mu_c    = mu_2 + S21 S11^-1 (t - mu_1)
//   Sigma_c = S22  - S21 S11^-1 S12
struct ConditionalGaussian {
  std::vector<int> free_indices;  // positions in the original vector
  std::vector<double> mean;
  Mat cov;
};

inline ConditionalGaussian condition_gaussian(
    const GaussianPrior& prior, const std::vector<std::pair<int, double>>& fixed) {
  const int m = prior.dim();
  std::vector<char> is_fixed(m, 0);
  std::vector<double> target(m, 0.0);
  for (const auto& [idx, value] : fixed) {
    if (idx < 0 || idx >= m) throw std::invalid_argument("fixed index out of range");
    if (is_fixed[idx]) throw std::invalid_argument("duplicate fixed index");
    is_fixed[idx] = 1;
    target[idx] = value;
  }
  ConditionalGaussian out;
  std::vector<int> fixed_idx;
  for (int i = 0; i < m; ++i) {
    (is_fixed[i] ? fixed_idx : out.free_indices).push_back(i);
  }
  const int nf = static_cast<int>(fixed_idx.size());
  const int nr = static_cast<int>(out.free_indices.size());
  if (nr == 0) return out;  // everything fixed: empty conditional
  if (nf == 0) {
    out.mean = prior.mean();
    out.cov = prior.cov();
    return out;
  }

  Mat s11(nf);
  for (int i = 0; i < nf; ++i) {
    for (int j = 0; j < nf; ++j) s11.at(i, j) = prior.cov().at(fixed_idx[i], fixed_idx[j]);
  }
  auto L11 = cholesky(s11);
  if (!L11) {
    throw NotPositiveDefiniteError("fixed block of the prior covariance is singular");
  }

  // columns of S11^-1 S12 solved one free index at a time
  std::vector<double> delta(nf);
  for (int i = 0; i < nf; ++i) {
    delta[i] = target[fixed_idx[i]] - prior.mean()[fixed_idx[i]];
  }
  const std::vector<double> w = chol_solve(*L11, delta);  // S11^-1 (t - mu_1)

  out.mean.resize(nr);
  out.cov = Mat(nr);
  std::vector<std::vector<double>> solved(nr);
  for (int c = 0; c < nr; ++c) {
    std::vector<double> s12_col(nf);
    for (int i = 0; i < nf; ++i) {
      s12_col[i] = prior.cov().at(fixed_idx[i], out.free_indices[c]);
    }
    solved[c] = chol_solve(*L11, s12_col);  // S11^-1 S12[:, c]
  }
  for (int r = 0; r < nr; ++r) {
    double mu = prior.mean()[out.free_indices[r]];
    for (int i = 0; i < nf; ++i) {
      mu += prior.cov().at(out.free_indices[r], fixed_idx[i]) * w[i];
    }
    out.mean[r] = mu;
    for (int c = 0; c < nr; ++c) {
      double v = prior.cov().at(out.free_indices[r], out.free_indices[c]);
      for (int i = 0; i < nf; ++i) {
        v -= prior.cov().at(out.free_indices[r], fixed_idx[i]) * solved[c][i];
      }
      out.cov.at(r, c) = v;
    }
  }
  // enforce exact symmetry against rounding
  for (int r = 0; r < nr; ++r) {
    for (int c = r + 1; c < nr; ++c) {
      const double v = 0.5 * (out.cov.at(r, c) + out.cov.at(c, r));
      out.cov.at(r, c) = v;
      out.cov.at(c, r) = v;
    }
  }
  return out;
}

// Fixed entries are copied verbatim; free entries are drawn from the
// conditional prior (Cholesky with escalating jitter, since the Schur
// complement may be only positive semi-definite).
inline std::vector<double> sample_y(const GaussianPrior& prior,
                                    const std::vector<std::pair<int, double>>& fixed,
                                    Rng& rng) {
  const int m = prior.dim();
  std::vector<double> y(m, 0.0);
  for (const auto& [idx, value] : fixed) y[idx] = value;
  ConditionalGaussian cond = condition_gaussian(prior, fixed);
  const int nr = static_cast<int>(cond.free_indices.size());
  if (nr == 0) return y;

  std::optional<Mat> L = cholesky(cond.cov);
  for (double jitter : {1e-12, 1e-9, 1e-6}) {
    if (L) break;
    Mat jittered = cond.cov;
    for (int i = 0; i < nr; ++i) jittered.at(i, i) += jitter;
    L = cholesky(jittered);
  }
  if (!L) throw NotPositiveDefiniteError("conditional covariance is singular");

  const std::vector<double> eps = rng.normal_vec(nr);
  for (int r = 0; r < nr; ++r) {
    double v = cond.mean[r];
    for (int j = 0; j <= r; ++j) v += L->at(r, j) * eps[j];
    y[cond.free_indices[r]] = v;
  }
  return y;
}

}  // namespace molvae

#endif  // MOLVAE_GAUSSIAN_HPP
