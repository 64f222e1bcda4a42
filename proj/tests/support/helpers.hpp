//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test utilities: independent oracles (finite differences,
// Monte-Carlo KL, brute-force kekulization), random SPD matrices and the
// synthetic molecule corpus used by the end-to-end suites. Everything here
// is deliberately written against the specification of the quantity, not
// against the implementation it checks.
#ifndef MOLVAE_TESTS_HELPERS_HPP
#define MOLVAE_TESTS_HELPERS_HPP

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "molvae/corpus.hpp"
#include "molvae/gaussian.hpp"
#include "molvae/optim.hpp"
#include "molvae/properties.hpp"
#include "molvae/rng.hpp"
#include "molvae/smiles.hpp"

namespace testsupport {

using molvae::Rng;

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

// Central difference of eval() with respect to one parameter entry.
inline double central_diff(molvae::ad::ParamStore& params, int p, std::size_t i,
                           const std::function<double()>& eval, double h = 1e-5) {
  double& slot = params.value(p).data[i];
  const double orig = slot;
  slot = orig + h;
  const double fp = eval();
  slot = orig - h;
  const double fm = eval();
  slot = orig;
  return (fp - fm) / (2.0 * h);
}

// |a - b| <= tol * max(|a|, |b|) + floor
inline bool close_rel(double a, double b, double tol, double floor = 1e-7) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)) + floor;
}

// ---------------------------------------------------------------------------
// Monte-Carlo KL oracles
// ---------------------------------------------------------------------------

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

inline double log_pdf_diag(const std::vector<double>& x,
                           const std::vector<double>& mu,
                           const std::vector<double>& var) {
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mu[i];
    s += kLog2Pi + std::log(var[i]) + d * d / var[i];
  }
  return -0.5 * s;
}

// KL(q || p) estimated as E_q[log q - log p] by sampling from q.
inline McEstimate mc_kl(const std::vector<double>& mq, const std::vector<double>& dq,
                        const std::function<double(const std::vector<double>&)>& log_p,
                        long samples, std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> x(mq.size());
  for (long s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = mq[i] + std::sqrt(dq[i]) * rng.normal();
    }
    const double f = log_pdf_diag(x, mq, dq) - log_p(x);
    sum += f;
    sumsq += f * f;
  }
  McEstimate est;
  est.mean = sum / samples;
  const double var = sumsq / samples - est.mean * est.mean;
  est.se = std::sqrt(std::max(var, 0.0) / samples);
  return est;
}

inline McEstimate mc_kl_vs_standard(const std::vector<double>& mq,
                                    const std::vector<double>& dq, long samples,
                                    std::uint64_t seed) {
  std::vector<double> zero(mq.size(), 0.0), one(mq.size(), 1.0);
  return mc_kl(mq, dq, [&](const std::vector<double>& x) {
    return log_pdf_diag(x, zero, one);
  }, samples, seed);
}

inline McEstimate mc_kl_vs_full(const std::vector<double>& mq,
                                const std::vector<double>& dq,
                                const molvae::GaussianPrior& prior, long samples,
                                std::uint64_t seed) {
  return mc_kl(mq, dq, [&](const std::vector<double>& x) {
    return prior.log_pdf(x);
  }, samples, seed);
}

// ---------------------------------------------------------------------------
// Random SPD matrices
// ---------------------------------------------------------------------------

inline molvae::Mat random_spd(int n, Rng& rng, double diag_boost = 0.5) {
  molvae::Mat b(n);
  for (auto& v : b.a) v = rng.normal();
  molvae::Mat spd(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += b.at(i, k) * b.at(j, k);
      spd.at(i, j) = s / n;
    }
    spd.at(i, i) += diag_boost;
  }
  return spd;
}

// ---------------------------------------------------------------------------
// Brute-force kekulization oracle
// ---------------------------------------------------------------------------

// Enumerates every single/double assignment of the aromatic bonds and
// accepts one iff each aromatic atom receives exactly the number of double
// bonds its valence demands (0 when the fixed contribution is already an
// allowed valence, 1 when one more unit reaches an allowed valence).
inline bool brute_force_kekulizable(const molvae::smiles::MoleculeGraph& g) {
  using molvae::smiles::BondOrder;
  std::vector<int> aromatic_bonds;
  for (int i = 0; i < static_cast<int>(g.bonds.size()); ++i) {
    if (g.bonds[i].order == BondOrder::aromatic) aromatic_bonds.push_back(i);
  }
  std::vector<int> demand(g.atoms.size(), -1);  // -1 = not aromatic
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    if (!g.atoms[i].aromatic) continue;
    double fixed = 0.0;
    for (const auto& b : g.bonds) {
      if (b.a != static_cast<int>(i) && b.b != static_cast<int>(i)) continue;
      fixed += (b.order == BondOrder::aromatic) ? 1.0 : molvae::smiles::bond_valence(b.order);
    }
    fixed += g.implicit_h[i];
    const int f = static_cast<int>(std::lround(fixed));
    const auto* el = molvae::smiles::find_element(g.atoms[i].element);
    bool f_ok = false, f1_ok = false;
    for (int v : el->valences) {
      f_ok |= (v == f);
      f1_ok |= (v == f + 1);
    }
    if (f_ok) {
      demand[i] = 0;
    } else if (f1_ok) {
      demand[i] = 1;
    } else {
      return false;
    }
  }
  const int k = static_cast<int>(aromatic_bonds.size());
  if (k > 20) throw std::runtime_error("oracle molecule too large");
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    std::vector<int> doubles(g.atoms.size(), 0);
    for (int b = 0; b < k; ++b) {
      if (mask & (1u << b)) {
        doubles[g.bonds[aromatic_bonds[b]].a] += 1;
        doubles[g.bonds[aromatic_bonds[b]].b] += 1;
      }
    }
    bool ok = true;
    for (std::size_t i = 0; i < g.atoms.size() && ok; ++i) {
      if (demand[i] >= 0 && doubles[i] != demand[i]) ok = false;
    }
    if (ok) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Synthetic molecule corpus
// ---------------------------------------------------------------------------

// Random valid molecules: heavy-atom chains with occasional double bonds,
// single-atom branches and ring suffixes. Properties computed with the
// project's own oracles span a wide MolWt/LogP range, which is what the
// end-to-end suites need.
inline std::string random_molecule(Rng& rng) {
  static const std::vector<std::string> chain_atoms{"C", "C", "C", "C", "C",
                                                    "C", "N", "N", "O", "S"};
  static const std::vector<std::string> branch_atoms{"C", "C", "N", "O", "F", "Cl"};
  static const std::vector<std::string> ring_suffixes{"c1ccccc1", "c1ccncc1",
                                                      "C1CCCCC1", "C1CCCC1"};
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::string s;
    const int length = 3 + static_cast<int>(rng.below(11));
    std::string prev = "C";
    s += prev;
    for (int i = 1; i < length; ++i) {
      const std::string atom = chain_atoms[rng.below(chain_atoms.size())];
      const bool can_double = (prev == "C" || prev == "N") && (atom == "C" || atom == "N");
      if (can_double && rng.uniform() < 0.12) s += "=";
      s += atom;
      if (atom == "C" && rng.uniform() < 0.22) {
        s += "(" + branch_atoms[rng.below(branch_atoms.size())] + ")";
      }
      prev = atom;
    }
    if (rng.uniform() < 0.3) s += ring_suffixes[rng.below(ring_suffixes.size())];
    if (molvae::smiles::validate(s).valid) return s;
  }
  return "CCO";  // unreachable in practice
}

inline std::vector<std::string> synthetic_corpus(int n, std::uint64_t seed) {
  Rng rng(molvae::derive_seed(seed, "synthetic-corpus"));
  std::set<std::string> unique;
  while (static_cast<int>(unique.size()) < n) unique.insert(random_molecule(rng));
  return {unique.begin(), unique.end()};
}

// Labels a corpus with the standard oracles (MolWt, LogP) in original units.
inline std::vector<molvae::DataRow> labeled_rows(const std::vector<std::string>& corpus) {
  const molvae::smiles::OracleSet oracles;
  std::vector<molvae::DataRow> rows;
  rows.reserve(corpus.size());
  for (const auto& s : corpus) {
    const auto g = molvae::smiles::parse_molecule(s);
    rows.push_back({s, std::vector<double>{oracles.evaluate("MolWt", g),
                                           oracles.evaluate("LogP", g)}});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Scratch directories
// ---------------------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("molvae-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport

#endif  // MOLVAE_TESTS_HELPERS_HPP
