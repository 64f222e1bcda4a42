//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_SSVAE_HPP
#define MOLVAE_SSVAE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "molvae/corpus.hpp"
#include "molvae/csv.hpp"
#include "molvae/gaussian.hpp"
#include "molvae/nets.hpp"
#include "molvae/optim.hpp"

namespace molvae::ssvae {

using ad::GradVector;
using ad::ParamStore;
using ad::Tape;
using ad::TapeEngine;
using ad::Tensor;
using nets::NetSpec;

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Closed-form KL divergences
// ---------------------------------------------------------------------------

// KL( N(mu, diag(var)) || N(0, I) ) = 0.5 sum(var + mu^2 - 1 - ln var)
inline double kl_diag_vs_standard(const std::vector<double>& mu,
                                  const std::vector<double>& var) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s += var[i] + mu[i] * mu[i] - 1.0 - std::log(var[i]);
  }
  return 0.5 * s;
}

// KL( N(m_q, diag(d_q)) || N(mu_y, Sigma_y) ). Returns exactly 0 when the
// distributions coincide bitwise; the generic path would otherwise leave
// rounding residue from the Cholesky.
inline double kl_diag_vs_full(const std::vector<double>& m_q,
                              const std::vector<double>& d_q,
                              const GaussianPrior& prior) {
  const int m = prior.dim();
  bool identical = true;
  for (int i = 0; i < m && identical; ++i) {
    if (m_q[i] != prior.mean()[i]) identical = false;
    for (int j = 0; j < m && identical; ++j) {
      if (prior.cov().at(i, j) != (i == j ? d_q[i] : 0.0)) identical = false;
    }
  }
  if (identical) return 0.0;

  double tr = 0.0, log_d = 0.0, quad = 0.0;
  std::vector<double> delta(m);
  for (int i = 0; i < m; ++i) {
    tr += prior.inverse().at(i, i) * d_q[i];
    log_d += std::log(d_q[i]);
    delta[i] = prior.mean()[i] - m_q[i];
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) quad += delta[i] * prior.inverse().at(i, j) * delta[j];
  }
  return 0.5 * (tr + quad - m + prior.log_det() - log_d);
}

// Tape/eval forms built from a Gaussian head's (mean, logvar) output.
template <class E>
typename E::Ref kl_diag_vs_standard_node(E& e, const nets::GaussianOut<E>& q) {
  const auto terms = e.add_n({e.exp(q.logvar), e.square(q.mean),
                              e.affine(q.logvar, -1.0, -1.0)});
  return e.affine(e.sum(terms), 0.5, 0.0);
}

template <class E>
typename E::Ref kl_diag_vs_full_node(E& e, const nets::GaussianOut<E>& q,
                                     const GaussianPrior& prior) {
  const int m = prior.dim();
  std::vector<double> inv_diag(m);
  Tensor inv = Tensor::zeros({m, m});
  for (int i = 0; i < m; ++i) {
    inv_diag[i] = prior.inverse().at(i, i);
    for (int j = 0; j < m; ++j) inv.data[i * m + j] = prior.inverse().at(i, j);
  }
  const auto var = e.exp(q.logvar);
  const auto tr = e.sum(e.mul(e.constant(Tensor::row(inv_diag)), var));
  const auto delta = e.sub(q.mean, e.constant(Tensor::row(prior.mean())));
  const auto quad = e.sum(e.mul(e.matmul(delta, e.constant(inv)), delta));
  const auto neg_log_d = e.affine(e.sum(q.logvar), -1.0, 0.0);
  const auto bracket = e.add_n({tr, quad, neg_log_d});
  return e.affine(bracket, 0.5, 0.5 * (prior.log_det() - m));
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

// Sum over steps of -log softmax(logits_t)[target_t].
template <class E>
typename E::Ref reconstruction_nll_node(E& e,
                                        const std::vector<typename E::Ref>& logits,
                                        const TokenSequence& target) {
  std::vector<typename E::Ref> picks;
  picks.reserve(logits.size());
  const int vocab = static_cast<int>(e.val(logits[0]).last_dim());
  for (std::size_t t = 0; t < logits.size(); ++t) {
    const auto lp = e.log_softmax(logits[t]);
    const auto hot = e.constant(nets::one_hot_row(vocab, target.indices[t]));
    picks.push_back(e.sum(e.mul(lp, hot)));
  }
  return e.affine(e.add_n(picks), -1.0, 0.0);
}

inline double reconstruction_nll(const std::vector<std::vector<double>>& logits,
                                 const TokenSequence& target) {
  double nll = 0.0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    const auto& row = logits[t];
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    nll -= row[target.indices[t]] - mx - std::log(sum);
  }
  return nll;
}

// ---------------------------------------------------------------------------
// Per-example losses (Eqs. of the labeled / unlabeled bounds)
// ---------------------------------------------------------------------------

struct ExampleLossParts {
  double reconstruction = 0.0;
  double kl = 0.0;        // KL to the standard normal over z
  double kl_y = 0.0;      // unlabeled only: KL of q(y|x) to the prior
  double log_prior_y = 0.0;  // labeled only: log N(y; mu_y, Sigma_y)
  double value = 0.0;     // the loss itself
};

// L(x,y) = recon_nll - log p(y) + KL(q(z|x,y) || N(0,I)); y in normalized
// units; a single reparameterized z sample drives the reconstruction.
template <class E>
std::pair<typename E::Ref, ExampleLossParts> labeled_loss(
    E& e, const NetSpec& spec, const TokenSequence& x,
    const std::vector<double>& y, const GaussianPrior& prior, Rng& noise) {
  const auto y_ref = e.constant(Tensor::row(y));
  const auto enc = nets::encoder_forward(e, spec, x, y_ref);
  const auto z = nets::reparam_sample(e, enc, noise.normal_vec(spec.z_dim));
  const auto logits = nets::decoder_forward(e, spec, y_ref, z, x);
  const auto recon = reconstruction_nll_node(e, logits, x);
  const auto kl_z = kl_diag_vs_standard_node(e, enc);
  const double log_py = prior.log_pdf(y);
  const auto loss = e.affine(e.add_n({recon, kl_z}), 1.0, -log_py);

  ExampleLossParts parts;
  parts.reconstruction = e.val(recon).item();
  parts.kl = e.val(kl_z).item();
  parts.log_prior_y = log_py;
  parts.value = e.val(loss).item();
  return {loss, parts};
}

// U(x) = recon_nll + KL(q(y|x) || p(y)) + KL(q(z|x,y~) || N(0,I)), a
// single-sample estimate with y~ reparameterized from the predictor.
template <class E>
std::pair<typename E::Ref, ExampleLossParts> unlabeled_loss(
    E& e, const NetSpec& spec, const TokenSequence& x, const GaussianPrior& prior,
    Rng& noise) {
  const auto pred = nets::predictor_forward(e, spec, x);
  const auto y = nets::reparam_sample(e, pred, noise.normal_vec(spec.m));
  const auto enc = nets::encoder_forward(e, spec, x, y);
  const auto z = nets::reparam_sample(e, enc, noise.normal_vec(spec.z_dim));
  const auto logits = nets::decoder_forward(e, spec, y, z, x);
  const auto recon = reconstruction_nll_node(e, logits, x);
  const auto kl_y = kl_diag_vs_full_node(e, pred, prior);
  const auto kl_z = kl_diag_vs_standard_node(e, enc);
  const auto loss = e.add_n({recon, kl_y, kl_z});

  ExampleLossParts parts;
  parts.reconstruction = e.val(recon).item();
  parts.kl = e.val(kl_z).item();
  parts.kl_y = e.val(kl_y).item();
  parts.value = e.val(loss).item();
  return {loss, parts};
}

// Squared error of the predictor mean against the observed (normalized)
// label; the beta term of the full objective.
template <class E>
typename E::Ref supervised_mse_node(E& e, const NetSpec& spec,
                                    const TokenSequence& x,
                                    const std::vector<double>& y) {
  const auto pred = nets::predictor_forward(e, spec, x);
  const auto delta = e.sub(e.constant(Tensor::row(y)), pred.mean);
  return e.sum(e.square(delta));
}

// ---------------------------------------------------------------------------
// Full objective over a batch
// ---------------------------------------------------------------------------

struct LossBreakdown {
  double labeled_elbo = 0.0;   // mean L over the labeled batch
  double unlabeled_elbo = 0.0; // mean U over the unlabeled batch
  double supervised_mse = 0.0; // mean squared error over the labeled batch
  double total = 0.0;          // labeled + unlabeled + beta * mse
};

struct LabeledItem {
  const TokenSequence* x;
  const std::vector<double>* y;  // normalized
};

// J = mean(L) + mean(U) + beta * mean(||y - mu(x)||^2), built on one tape.
// Noise streams are derived per example from `seed`, so the value is a pure
// function of (params, batch, seed).
inline std::pair<Tape::Ref, LossBreakdown> total_loss(
    TapeEngine& e, const NetSpec& spec, const std::vector<LabeledItem>& labeled,
    const std::vector<const TokenSequence*>& unlabeled, double beta,
    const GaussianPrior& prior, std::uint64_t seed) {
  std::vector<Tape::Ref> parts;
  LossBreakdown out;
  if (!labeled.empty()) {
    std::vector<Tape::Ref> ls, ms;
    double mse_sum = 0.0;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      Rng noise(derive_seed(seed, "labeled-noise", i));
      auto [l, lp] = labeled_loss(e, spec, *labeled[i].x, *labeled[i].y, prior, noise);
      ls.push_back(l);
      ms.push_back(supervised_mse_node(e, spec, *labeled[i].x, *labeled[i].y));
      mse_sum += e.val(ms.back()).item();
      out.labeled_elbo += lp.value;
    }
    const double inv = 1.0 / static_cast<double>(labeled.size());
    parts.push_back(e.affine(e.add_n(ls), inv, 0.0));
    parts.push_back(e.affine(e.add_n(ms), beta * inv, 0.0));
    out.labeled_elbo *= inv;
    out.supervised_mse = mse_sum * inv;
  }
  if (!unlabeled.empty()) {
    std::vector<Tape::Ref> us;
    for (std::size_t j = 0; j < unlabeled.size(); ++j) {
      Rng noise(derive_seed(seed, "unlabeled-noise", j));
      auto [u, up] = unlabeled_loss(e, spec, *unlabeled[j], prior, noise);
      us.push_back(u);
      out.unlabeled_elbo += up.value;
    }
    const double inv = 1.0 / static_cast<double>(unlabeled.size());
    parts.push_back(e.affine(e.add_n(us), inv, 0.0));
    out.unlabeled_elbo *= inv;
  }
  const Tape::Ref total = e.add_n(parts);
  out.total = out.labeled_elbo + out.unlabeled_elbo + beta * out.supervised_mse;
  return {total, out};
}

// ---------------------------------------------------------------------------
// Early stopping
// ---------------------------------------------------------------------------

// Stops when no epoch in the trailing window improved the best value by at
// least `min_rel` relative (|best| in the denominator so negative losses
// behave sensibly).
class EarlyStopper {
 public:
  EarlyStopper(int window, double min_rel) : window_(window), min_rel_(min_rel) {}

  // Returns true when training should stop after this observation.
  bool observe(double val) {
    if (!has_best_ || val < best_ - min_rel_ * std::abs(best_)) {
      has_best_ = true;
      best_ = val;
      since_improve_ = 0;
    } else {
      ++since_improve_;
    }
    return since_improve_ >= window_;
  }

  double best() const { return best_; }

 private:
  int window_;
  double min_rel_;
  bool has_best_ = false;
  double best_ = 0.0;
  int since_improve_ = 0;
};

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

enum class TrainMode { ssvae, predictor_only };

struct TrainConfig {
  double beta = 1e4;
  double lr = 1e-3;
  int labeled_batch = 100;
  int unlabeled_batch = 100;
  int max_epochs = 300;
  int early_stop_window = 10;
  double early_stop_min_improvement = 0.01;  // 1% relative
  std::uint64_t seed = 0;
  int threads = 2;
  TrainMode mode = TrainMode::ssvae;

  void check() const {
    if (beta < 0.0) throw TrainError("beta must be >= 0");
    if (labeled_batch < 1 || unlabeled_batch < 1) {
      throw TrainError("batch sizes must be >= 1");
    }
    if (early_stop_window < 1) throw TrainError("early-stop window must be >= 1");
    if (max_epochs < 1) throw TrainError("max_epochs must be >= 1");
  }
};

struct EpochRecord {
  LossBreakdown train;
  LossBreakdown val;
  std::vector<double> val_mae;  // original units, per property; empty if no labels
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int stopped_epoch = 0;  // 1-based epoch index of the last epoch run
  std::string stop_reason;
  int best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
};

struct TrainResult {
  ParamStore params;  // parameters of the best validation epoch
  TrainHistory history;
};

namespace detail {

struct TaskResult {
  GradVector grads;
  double loss = 0.0;  // L or U
  double mse = 0.0;   // labeled tasks only
};

// One per-example forward/backward. `scale` folds the batch-mean weights
// into the contribution that is differentiated.
inline TaskResult run_task(const NetSpec& spec, const ParamStore& params,
                           const Example& ex, bool labeled, double beta,
                           double scale_loss, double scale_mse,
                           const GaussianPrior& prior, std::uint64_t noise_seed,
                           TrainMode mode) {
  Tape tape;
  TapeEngine e(tape, params);
  Rng noise(noise_seed);
  TaskResult out;
  std::vector<Tape::Ref> contrib;
  if (labeled) {
    if (mode == TrainMode::ssvae) {
      auto [l, parts] = labeled_loss(e, spec, ex.seq, *ex.label, prior, noise);
      out.loss = parts.value;
      contrib.push_back(e.affine(l, scale_loss, 0.0));
    }
    const auto mse = supervised_mse_node(e, spec, ex.seq, *ex.label);
    out.mse = e.val(mse).item();
    const double w = (mode == TrainMode::ssvae) ? beta * scale_mse : scale_mse;
    if (w != 0.0) contrib.push_back(e.affine(mse, w, 0.0));
  } else {
    auto [u, parts] = unlabeled_loss(e, spec, ex.seq, prior, noise);
    out.loss = parts.value;
    contrib.push_back(e.affine(u, scale_loss, 0.0));
  }
  if (!contrib.empty()) {
    tape.backward(e.tape().add_n(contrib));
  }
  out.grads = e.collect_grads();
  return out;
}

}  // namespace detail

// Validation objective over the whole validation split with noise fixed per
// example index, so epochs are compared on the same draw.
inline LossBreakdown validation_loss(const NetSpec& spec, const ParamStore& params,
                                     const std::vector<Example>& val, double beta,
                                     const GaussianPrior& prior, std::uint64_t seed,
                                     TrainMode mode) {
  ad::EvalEngine e(params);
  LossBreakdown out;
  long nl = 0, nu = 0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    Rng noise(derive_seed(seed, "val-noise", i));
    const Example& ex = val[i];
    if (ex.label) {
      ++nl;
      if (mode == TrainMode::ssvae) {
        auto [l, parts] = labeled_loss(e, spec, ex.seq, *ex.label, prior, noise);
        (void)l;
        out.labeled_elbo += parts.value;
      }
      const auto mse = supervised_mse_node(e, spec, ex.seq, *ex.label);
      out.supervised_mse += e.val(mse).item();
    } else if (mode == TrainMode::ssvae) {
      ++nu;
      auto [u, parts] = unlabeled_loss(e, spec, ex.seq, prior, noise);
      (void)u;
      out.unlabeled_elbo += parts.value;
    }
    e.reset();
  }
  if (nl > 0) {
    out.labeled_elbo /= static_cast<double>(nl);
    out.supervised_mse /= static_cast<double>(nl);
  }
  if (nu > 0) out.unlabeled_elbo /= static_cast<double>(nu);
  const double effective_beta = (mode == TrainMode::ssvae) ? beta : 1.0;
  out.total = out.labeled_elbo + out.unlabeled_elbo + effective_beta * out.supervised_mse;
  return out;
}

// Point prediction in normalized units.
inline std::vector<double> predict_normalized(const NetSpec& spec,
                                              const ParamStore& params,
                                              const TokenSequence& x) {
  return nets::predictor_moments(spec, params, x).mean;
}

// Per-property mean absolute error between predictions and labels, both in
// original units.
inline std::vector<double> mae(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<double>>& labels) {
  if (predictions.empty()) return {};
  const std::size_t m = predictions[0].size();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out[j] += std::abs(predictions[i][j] - labels[i][j]);
    }
  }
  for (auto& v : out) v /= static_cast<double>(predictions.size());
  return out;
}

inline std::vector<double> validation_mae(const NetSpec& spec,
                                          const ParamStore& params,
                                          const std::vector<Example>& val,
                                          const NormalizationStats& stats) {
  std::vector<std::vector<double>> preds, labels;
  for (const auto& ex : val) {
    if (!ex.label) continue;
    preds.push_back(denormalize_label(predict_normalized(spec, params, ex.seq), stats));
    labels.push_back(denormalize_label(*ex.label, stats));
  }
  return mae(preds, labels);
}

// Adam over shuffled labeled+unlabeled mini-batches with early stopping on
// the validation objective, starting from the given parameters (used when
// resuming from a checkpoint; Adam moments start fresh). Returns the
// parameters of the best validation epoch. `train_set` and `val_set` carry
// normalized labels; `stats` is only used to report validation MAE in
// original units.
inline TrainResult train_from(const NetSpec& spec, const TrainConfig& cfg,
                              ParamStore initial,
                              const std::vector<Example>& train_set,
                              const std::vector<Example>& val_set,
                              const GaussianPrior& prior,
                              const NormalizationStats& stats) {
  cfg.check();
  long labeled_count = 0;
  for (const auto& ex : train_set) labeled_count += ex.label ? 1 : 0;
  if (labeled_count == 0) throw TrainError("training set has no labeled examples");

  ParamStore params = std::move(initial);
  ad::AdamState adam(params, ad::AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  BatchSchedule schedule(train_set, cfg.labeled_batch, cfg.unlabeled_batch, cfg.seed);

  TrainResult result;
  EarlyStopper stopper(cfg.early_stop_window, cfg.early_stop_min_improvement);
  ParamStore best = params;
  const int threads = std::max(1, cfg.threads);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto steps = schedule.epoch(epoch);
    LossBreakdown train_sums;
    long step_index = 0;
    for (const auto& step : steps) {
      struct TaskSpec {
        int example;
        bool labeled;
        double scale_loss, scale_mse;
        std::uint64_t noise_seed;
      };
      std::vector<TaskSpec> tasks;
      const std::uint64_t step_seed = derive_seed(
          cfg.seed, "step", static_cast<std::uint64_t>(epoch) * 1000003ULL +
                                static_cast<std::uint64_t>(step_index));
      const double inv_l = step.labeled.empty() ? 0.0 : 1.0 / step.labeled.size();
      const double inv_u = step.unlabeled.empty() ? 0.0 : 1.0 / step.unlabeled.size();
      for (std::size_t i = 0; i < step.labeled.size(); ++i) {
        tasks.push_back({step.labeled[i], true, inv_l, inv_l,
                         derive_seed(step_seed, "labeled-noise", i)});
      }
      if (cfg.mode == TrainMode::ssvae) {
        for (std::size_t j = 0; j < step.unlabeled.size(); ++j) {
          tasks.push_back({step.unlabeled[j], false, inv_u, 0.0,
                           derive_seed(step_seed, "unlabeled-noise", j)});
        }
      }

      std::vector<detail::TaskResult> results(tasks.size());
      std::exception_ptr failure;
      std::mutex failure_mutex;
      auto worker = [&](int tid) {
        for (std::size_t t = tid; t < tasks.size(); t += threads) {
          try {
            const auto& ts = tasks[t];
            results[t] = detail::run_task(spec, params, train_set[ts.example],
                                          ts.labeled, cfg.beta, ts.scale_loss,
                                          ts.scale_mse, prior, ts.noise_seed,
                                          cfg.mode);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      };
      if (threads == 1 || tasks.size() <= 1) {
        worker(0);
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
      }
      if (failure) {
        try {
          std::rethrow_exception(failure);
        } catch (const std::exception& e) {
          throw TrainError("epoch " + std::to_string(epoch + 1) + " step " +
                           std::to_string(step_index + 1) + ": " + e.what());
        }
      }

      // reduce in example order (thread-count independent)
      GradVector grads = ad::zero_grads(params);
      LossBreakdown batch;
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        ad::accumulate_grads(grads, results[t].grads);
        if (tasks[t].labeled) {
          batch.labeled_elbo += results[t].loss * tasks[t].scale_loss;
          batch.supervised_mse += results[t].mse * tasks[t].scale_mse;
        } else {
          batch.unlabeled_elbo += results[t].loss * tasks[t].scale_loss;
        }
      }
      const double eff_beta = (cfg.mode == TrainMode::ssvae) ? cfg.beta : 1.0;
      batch.total = batch.labeled_elbo + batch.unlabeled_elbo +
                    eff_beta * batch.supervised_mse;
      if (!std::isfinite(batch.total)) {
        throw TrainError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                         " step " + std::to_string(step_index + 1));
      }
      adam.step(params, grads);
      train_sums.labeled_elbo += batch.labeled_elbo;
      train_sums.unlabeled_elbo += batch.unlabeled_elbo;
      train_sums.supervised_mse += batch.supervised_mse;
      train_sums.total += batch.total;
      ++step_index;
    }

    EpochRecord rec;
    const double inv_steps = steps.empty() ? 0.0 : 1.0 / static_cast<double>(steps.size());
    rec.train.labeled_elbo = train_sums.labeled_elbo * inv_steps;
    rec.train.unlabeled_elbo = train_sums.unlabeled_elbo * inv_steps;
    rec.train.supervised_mse = train_sums.supervised_mse * inv_steps;
    rec.train.total = train_sums.total * inv_steps;
    rec.val = validation_loss(spec, params, val_set, cfg.beta, prior, cfg.seed, cfg.mode);
    rec.val_mae = validation_mae(spec, params, val_set, stats);
    result.history.epochs.push_back(rec);

    if (rec.val.total < result.history.best_val) {
      result.history.best_val = rec.val.total;
      result.history.best_epoch = epoch + 1;
      best = params;
    }
    result.history.stopped_epoch = epoch + 1;
    if (stopper.observe(rec.val.total)) {
      result.history.stop_reason = "early_stop";
      break;
    }
  }
  if (result.history.stop_reason.empty()) result.history.stop_reason = "max_epochs";
  result.params = std::move(best);
  return result;
}

inline TrainResult train(const NetSpec& spec, const TrainConfig& cfg,
                         const std::vector<Example>& train_set,
                         const std::vector<Example>& val_set,
                         const GaussianPrior& prior, const NormalizationStats& stats) {
  return train_from(spec, cfg, nets::init_params(spec, cfg.seed), train_set,
                    val_set, prior, stats);
}

// history CSV: epoch,train_L,train_U,train_mse,train_J,val_J,val_mae_<prop>...
inline void write_history_csv(const std::string& path, const TrainHistory& h,
                              const std::vector<std::string>& property_names) {
  csv::Writer w(path);
  std::vector<std::string> header{"epoch", "train_L", "train_U", "train_mse",
                                  "train_J", "val_J"};
  for (const auto& p : property_names) header.push_back("val_mae_" + p);
  w.row(header);
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    const auto& r = h.epochs[i];
    std::vector<std::string> row{
        std::to_string(i + 1),           csv::fmt_double(r.train.labeled_elbo),
        csv::fmt_double(r.train.unlabeled_elbo), csv::fmt_double(r.train.supervised_mse),
        csv::fmt_double(r.train.total),  csv::fmt_double(r.val.total)};
    for (std::size_t p = 0; p < property_names.size(); ++p) {
      row.push_back(p < r.val_mae.size() ? csv::fmt_double(r.val_mae[p]) : "");
    }
    w.row(row);
  }
}

}  // namespace molvae::ssvae

#endif  // MOLVAE_SSVAE_HPP
