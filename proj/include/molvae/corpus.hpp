//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_CORPUS_HPP
#define MOLVAE_CORPUS_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "molvae/csv.hpp"
#include "molvae/rng.hpp"
#include "molvae/smiles.hpp"

namespace molvae {

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OovError : CorpusError {
  explicit OovError(const std::string& tok)
      : CorpusError("token '" + tok + "' not in vocabulary"), token(tok) {}
  std::string token;
};

struct DegeneratePropertyError : CorpusError {
  explicit DegeneratePropertyError(int idx)
      : CorpusError("property " + std::to_string(idx) +
                    " has zero standard deviation"),
        property_index(idx) {}
  int property_index;
};

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

// Symbol table over SMILES tokens plus the reserved terminal symbol, which
// always sits at index 0 so the decoder's stop index is architecture-wide.
class Vocabulary {
 public:
  static constexpr const char* kTerminal = "<end>";
  static constexpr int kTerminalIndex = 0;

  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> symbols) {
    symbols_ = std::move(symbols);
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (!index_.emplace(symbols_[i], static_cast<int>(i)).second) {
        throw CorpusError("duplicate vocabulary symbol " + symbols_[i]);
      }
    }
    if (symbols_.empty() || symbols_[0] != kTerminal) {
      throw CorpusError("vocabulary must start with the terminal symbol");
    }
  }

  // Terminal first, then the sorted unique tokens of the corpus.
  static Vocabulary build(const std::vector<std::string>& corpus) {
    if (corpus.empty()) throw CorpusError("empty corpus");
    std::set<std::string> unique;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      try {
        for (auto& t : smiles::tokenize(corpus[i])) unique.insert(std::move(t));
      } catch (const smiles::SmilesError& e) {
        throw CorpusError("line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    std::vector<std::string> symbols;
    symbols.reserve(unique.size() + 1);
    symbols.emplace_back(kTerminal);
    symbols.insert(symbols.end(), unique.begin(), unique.end());
    return Vocabulary(std::move(symbols));
  }

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbol(int i) const { return symbols_.at(i); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  std::optional<int> find(const std::string& tok) const {
    auto it = index_.find(tok);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CorpusError("cannot write vocabulary to " + path);
    for (const auto& s : symbols_) out << s << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open vocabulary " + path);
    std::vector<std::string> symbols;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) symbols.push_back(line);
    }
    return Vocabulary(std::move(symbols));
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Sequences and examples
// ---------------------------------------------------------------------------

// Vocabulary indices ending in exactly one terminal index.
struct TokenSequence {
  std::vector<int> indices;
  int length() const { return static_cast<int>(indices.size()); }
};

struct Example {
  TokenSequence seq;
  std::optional<std::vector<double>> label;
  std::string source;  // original SMILES
};

inline TokenSequence encode(const std::string& s, const Vocabulary& v) {
  TokenSequence seq;
  for (const auto& tok : smiles::tokenize(s)) {
    auto idx = v.find(tok);
    if (!idx) throw OovError(tok);
    seq.indices.push_back(*idx);
  }
  seq.indices.push_back(Vocabulary::kTerminalIndex);
  return seq;
}

// Inverse of encode up to (and excluding) the terminal.
inline std::string decode(const std::vector<int>& indices, const Vocabulary& v) {
  std::string out;
  for (int idx : indices) {
    if (idx < 0 || idx >= v.size()) {
      throw CorpusError("index " + std::to_string(idx) + " out of vocabulary range");
    }
    if (idx == Vocabulary::kTerminalIndex) break;
    out += v.symbol(idx);
  }
  return out;
}

inline std::string decode(const TokenSequence& seq, const Vocabulary& v) {
  return decode(seq.indices, v);
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

struct DataRow {
  std::string smiles;
  std::optional<std::vector<double>> label;
};

struct RawDataset {
  std::vector<DataRow> rows;
  std::vector<std::string> property_names;
  int skipped_too_long = 0;
};

// CSV with header `smiles,<prop1>,...`; empty property cells mean unlabeled
// (all cells must be empty together), `#` starts a comment line. Rows whose
// token count exceeds max_len - 1 are skipped and counted.
inline RawDataset load_dataset_csv(const std::string& path, int max_len = 120) {
  RawDataset ds;
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw CorpusError("dataset " + path + " is empty");
  const auto& header = rows[0].fields;
  if (header.empty() || csv::trim(header[0]) != "smiles") {
    throw CorpusError("dataset " + path + " must start with a 'smiles' header column");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    ds.property_names.push_back(csv::trim(header[i]));
    if (ds.property_names.back().empty()) {
      throw CorpusError("dataset " + path + " has an empty property column name");
    }
  }
  const std::size_t m = ds.property_names.size();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != m + 1) {
      throw CorpusError("line " + std::to_string(row.line_number) + ": expected " +
                        std::to_string(m + 1) + " fields, got " +
                        std::to_string(row.fields.size()));
    }
    DataRow dr;
    dr.smiles = csv::trim(row.fields[0]);
    if (dr.smiles.empty()) {
      throw CorpusError("line " + std::to_string(row.line_number) + ": empty smiles");
    }
    std::size_t tokens;
    try {
      tokens = smiles::tokenize(dr.smiles).size();
    } catch (const smiles::SmilesError& e) {
      throw CorpusError("line " + std::to_string(row.line_number) + ": " + e.what());
    }
    if (static_cast<int>(tokens) + 1 > max_len) {
      ds.skipped_too_long += 1;
      continue;
    }
    int empty_cells = 0;
    std::vector<double> values;
    for (std::size_t i = 0; i < m; ++i) {
      const std::string cell = csv::trim(row.fields[i + 1]);
      if (cell.empty()) {
        ++empty_cells;
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw CorpusError("line " + std::to_string(row.line_number) +
                          ": bad number '" + cell + "'");
      }
      values.push_back(v);
    }
    if (empty_cells == 0 && m > 0) {
      dr.label = std::move(values);
    } else if (empty_cells != static_cast<int>(m)) {
      throw CorpusError("line " + std::to_string(row.line_number) +
                        ": partially labeled row (leave all property cells "
                        "empty for unlabeled molecules)");
    }
    ds.rows.push_back(std::move(dr));
  }
  return ds;
}

inline Example encode_example(const DataRow& row, const Vocabulary& v) {
  return Example{encode(row.smiles, v), row.label, row.smiles};
}

struct EncodedDataset {
  std::vector<Example> examples;
  int skipped_oov = 0;
};

// strict: throw on out-of-vocabulary tokens; lenient: skip and count (used
// for validation/test sets, whose symbols the training vocabulary may miss).
inline EncodedDataset encode_dataset(const std::vector<DataRow>& rows,
                                     const Vocabulary& v, bool strict = true) {
  EncodedDataset out;
  out.examples.reserve(rows.size());
  for (const auto& row : rows) {
    try {
      out.examples.push_back(encode_example(row, v));
    } catch (const OovError&) {
      if (strict) throw;
      out.skipped_oov += 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label normalization
// ---------------------------------------------------------------------------

struct NormalizationStats {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> stddev;  // population convention (1/N)
  int property_count() const { return static_cast<int>(mean.size()); }
};

inline NormalizationStats compute_label_stats(const std::vector<Example>& ds,
                                              std::vector<std::string> names) {
  const int m = static_cast<int>(names.size());
  std::vector<double> sum(m, 0.0), sumsq(m, 0.0);
  long n = 0;
  for (const auto& ex : ds) {
    if (!ex.label) continue;
    ++n;
    for (int i = 0; i < m; ++i) {
      sum[i] += (*ex.label)[i];
      sumsq[i] += (*ex.label)[i] * (*ex.label)[i];
    }
  }
  if (n < 2) throw CorpusError("need at least 2 labeled examples to normalize");
  NormalizationStats stats;
  stats.names = std::move(names);
  stats.mean.resize(m);
  stats.stddev.resize(m);
  for (int i = 0; i < m; ++i) {
    stats.mean[i] = sum[i] / static_cast<double>(n);
    const double var = sumsq[i] / static_cast<double>(n) - stats.mean[i] * stats.mean[i];
    stats.stddev[i] = std::sqrt(std::max(var, 0.0));
    if (stats.stddev[i] == 0.0) throw DegeneratePropertyError(i);
  }
  return stats;
}

inline std::vector<double> normalize_label(const std::vector<double>& y,
                                           const NormalizationStats& s) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = (y[i] - s.mean[i]) / s.stddev[i];
  }
  return out;
}

inline std::vector<double> denormalize_label(const std::vector<double>& y,
                                             const NormalizationStats& s) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = y[i] * s.stddev[i] + s.mean[i];
  }
  return out;
}

inline void apply_normalization(std::vector<Example>& ds,
                                const NormalizationStats& s) {
  for (auto& ex : ds) {
    if (ex.label) ex.label = normalize_label(*ex.label, s);
  }
}

// Computes stats over the labeled examples and rescales them in place.
inline NormalizationStats normalize_labels(std::vector<Example>& ds,
                                           std::vector<std::string> names) {
  NormalizationStats stats = compute_label_stats(ds, std::move(names));
  apply_normalization(ds, stats);
  return stats;
}

// ---------------------------------------------------------------------------
// Split / mask / batches
// ---------------------------------------------------------------------------

template <typename T>
struct Split {
  std::vector<T> train, validation, test;
};

// Deterministic shuffled partition; sizes are the rounded fractions with the
// remainder going to the last part.
template <typename T>
Split<T> split(const std::vector<T>& ds, const std::vector<double>& fractions,
               std::uint64_t seed) {
  if (fractions.size() < 2 || fractions.size() > 3) {
    throw CorpusError("split needs 2 or 3 fractions");
  }
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw CorpusError("negative split fraction");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw CorpusError("split fractions must sum to 1");

  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);

  const auto n = static_cast<long>(ds.size());
  long n_train = std::lround(fractions[0] * n);
  long n_val = std::lround(fractions[1] * n);
  n_train = std::clamp<long>(n_train, 0, n);
  n_val = std::clamp<long>(n_val, 0, n - n_train);

  Split<T> out;
  for (long i = 0; i < n; ++i) {
    const T& item = ds[order[i]];
    if (i < n_train) {
      out.train.push_back(item);
    } else if (i < n_train + n_val) {
      out.validation.push_back(item);
    } else {
      out.test.push_back(item);
    }
  }
  if (fractions.size() == 2 && !out.test.empty()) {
    // rounding remainder with 2 fractions goes to validation
    for (auto& item : out.test) out.validation.push_back(std::move(item));
    out.test.clear();
  }
  return out;
}

// Keeps labels on exactly round(fraction * N) examples (N = dataset size,
// capped by how many are labeled to begin with); removes the rest.
template <typename T>
std::vector<T> mask_labels(std::vector<T> ds, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw CorpusError("labeled fraction must be within [0, 1]");
  }
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].label) labeled.push_back(i);
  }
  long keep = std::lround(fraction * static_cast<double>(ds.size()));
  keep = std::min<long>(keep, static_cast<long>(labeled.size()));
  Rng rng(derive_seed(seed, "mask"));
  rng.shuffle(labeled);
  for (std::size_t i = keep; i < labeled.size(); ++i) {
    ds[labeled[i]].label.reset();
  }
  return ds;
}

// One labeled plus one unlabeled mini-batch per optimization step. Each
// epoch reshuffles both pools; the smaller pool cycles within the epoch so
// the step count is max(ceil(nl/bl), ceil(nu/bu)).
class BatchSchedule {
 public:
  struct Step {
    std::vector<int> labeled;    // indices into the dataset
    std::vector<int> unlabeled;
  };

  BatchSchedule(const std::vector<Example>& ds, int labeled_batch,
                int unlabeled_batch, std::uint64_t seed)
      : labeled_batch_(labeled_batch), unlabeled_batch_(unlabeled_batch), seed_(seed) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      (ds[i].label ? labeled_ : unlabeled_).push_back(static_cast<int>(i));
    }
    if (!labeled_.empty() && labeled_batch_ < 1) {
      throw CorpusError("labeled batch size must be >= 1");
    }
    if (!unlabeled_.empty() && unlabeled_batch_ < 1) {
      throw CorpusError("unlabeled batch size must be >= 1");
    }
  }

  long labeled_count() const { return static_cast<long>(labeled_.size()); }
  long unlabeled_count() const { return static_cast<long>(unlabeled_.size()); }

  long steps_per_epoch() const {
    auto steps = [](long n, long b) { return n == 0 ? 0L : (n + b - 1) / b; };
    return std::max(steps(labeled_count(), labeled_batch_),
                    steps(unlabeled_count(), unlabeled_batch_));
  }

  std::vector<Step> epoch(long epoch_index) const {
    std::vector<int> lab = labeled_, unl = unlabeled_;
    Rng rl(derive_seed(seed_, "batch-l", static_cast<std::uint64_t>(epoch_index)));
    Rng ru(derive_seed(seed_, "batch-u", static_cast<std::uint64_t>(epoch_index)));
    rl.shuffle(lab);
    ru.shuffle(unl);
    const long steps = steps_per_epoch();
    std::vector<Step> out;
    out.reserve(steps);
    for (long s = 0; s < steps; ++s) {
      Step st;
      if (!lab.empty()) {
        for (int i = 0; i < labeled_batch_; ++i) {
          const long pos = s * labeled_batch_ + i;
          if (pos >= static_cast<long>(lab.size()) &&
              s * labeled_batch_ < static_cast<long>(lab.size())) {
            break;  // short final batch rather than wrapping mid-batch
          }
          st.labeled.push_back(lab[pos % lab.size()]);
        }
      }
      if (!unl.empty()) {
        for (int i = 0; i < unlabeled_batch_; ++i) {
          const long pos = s * unlabeled_batch_ + i;
          if (pos >= static_cast<long>(unl.size()) &&
              s * unlabeled_batch_ < static_cast<long>(unl.size())) {
            break;
          }
          st.unlabeled.push_back(unl[pos % unl.size()]);
        }
      }
      out.push_back(std::move(st));
    }
    return out;
  }

 private:
  std::vector<int> labeled_, unlabeled_;
  int labeled_batch_, unlabeled_batch_;
  std::uint64_t seed_;
};

}  // namespace molvae

#endif  // MOLVAE_CORPUS_HPP
