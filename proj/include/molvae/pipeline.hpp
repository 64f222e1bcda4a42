//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_PIPELINE_HPP
#define MOLVAE_PIPELINE_HPP

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "molvae/checkpoint.hpp"
#include "molvae/condgen.hpp"
#include "molvae/config.hpp"
#include "molvae/corpus.hpp"
#include "molvae/csv.hpp"
#include "molvae/model.hpp"
#include "molvae/properties.hpp"
#include "molvae/ssvae.hpp"

namespace molvae::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Data preparation
// ---------------------------------------------------------------------------

// Restricts a dataset's labels to the named columns (in the given order).
inline RawDataset select_properties(RawDataset raw,
                                    const std::vector<std::string>& names) {
  if (names.empty()) return raw;
  std::vector<int> cols;
  for (const auto& n : names) {
    auto it = std::find(raw.property_names.begin(), raw.property_names.end(), n);
    if (it == raw.property_names.end()) {
      throw ConfigError("dataset has no property column '" + n + "'");
    }
    cols.push_back(static_cast<int>(it - raw.property_names.begin()));
  }
  for (auto& row : raw.rows) {
    if (!row.label) continue;
    std::vector<double> sel;
    sel.reserve(cols.size());
    for (int c : cols) sel.push_back((*row.label)[c]);
    row.label = std::move(sel);
  }
  raw.property_names = names;
  return raw;
}

struct PreparedData {
  std::vector<Example> train, validation, test;
  Vocabulary vocab;
  NormalizationStats stats;
  GaussianPrior prior;
  std::vector<std::string> train_smiles;
  int skipped_oov = 0;
};

// split -> mask -> vocabulary (train split only) -> encode -> normalize
// (stats from labeled train examples) -> fit prior. Labels come out in
// normalized units.
inline PreparedData prepare(const RunConfig& cfg, RawDataset raw) {
  raw = select_properties(std::move(raw), cfg.properties);
  auto parts = split(raw.rows, cfg.split_fractions, cfg.seed);
  parts.train = mask_labels(std::move(parts.train), cfg.labeled_fraction,
                            derive_seed(cfg.seed, "train"));
  parts.validation = mask_labels(std::move(parts.validation), cfg.labeled_fraction,
                                 derive_seed(cfg.seed, "validation"));

  PreparedData out;
  out.train_smiles.reserve(parts.train.size());
  for (const auto& row : parts.train) out.train_smiles.push_back(row.smiles);
  out.vocab = Vocabulary::build(out.train_smiles);

  out.train = encode_dataset(parts.train, out.vocab, /*strict=*/true).examples;
  auto val = encode_dataset(parts.validation, out.vocab, /*strict=*/false);
  auto test = encode_dataset(parts.test, out.vocab, /*strict=*/false);
  out.validation = std::move(val.examples);
  out.test = std::move(test.examples);
  out.skipped_oov = val.skipped_oov + test.skipped_oov;

  out.stats = normalize_labels(out.train, raw.property_names);
  apply_normalization(out.validation, out.stats);
  apply_normalization(out.test, out.stats);

  std::vector<std::vector<double>> ys;
  for (const auto& ex : out.train) {
    if (ex.label) ys.push_back(*ex.label);
  }
  out.prior = GaussianPrior::fit(ys);
  return out;
}

// One labeled plus one unlabeled sub-batch per step, sized proportionally to
// the pools so both finish in roughly one epoch.
inline std::pair<int, int> batch_split(int batch_size, long labeled, long unlabeled) {
  if (unlabeled == 0) return {std::max(1, batch_size), 1};
  if (labeled == 0) return {1, std::max(1, batch_size)};
  const double frac = static_cast<double>(labeled) / (labeled + unlabeled);
  int bl = static_cast<int>(std::lround(batch_size * frac));
  bl = std::clamp(bl, 1, std::max(1, batch_size - 1));
  return {bl, std::max(1, batch_size - bl)};
}

inline ssvae::TrainConfig make_train_config(const RunConfig& cfg, long labeled,
                                            long unlabeled) {
  ssvae::TrainConfig tc;
  tc.beta = cfg.beta;
  tc.lr = cfg.lr;
  if (cfg.mode == "predictor_only") {
    tc.mode = ssvae::TrainMode::predictor_only;
    tc.labeled_batch = static_cast<int>(
        std::clamp<long>(labeled, 1, std::max(1, cfg.batch_size)));
    tc.unlabeled_batch = 1;
  } else if (cfg.mode == "ssvae") {
    tc.mode = ssvae::TrainMode::ssvae;
    const auto [bl, bu] = batch_split(cfg.batch_size, labeled, unlabeled);
    tc.labeled_batch = bl;
    tc.unlabeled_batch = bu;
  } else {
    throw ConfigError("unknown train mode '" + cfg.mode + "'");
  }
  tc.max_epochs = cfg.max_epochs;
  tc.early_stop_window = cfg.early_stop_window;
  tc.early_stop_min_improvement = cfg.early_stop_improvement;
  tc.seed = cfg.seed;
  tc.threads = cfg.threads;
  return tc;
}

// ---------------------------------------------------------------------------
// Commands. Each writes deterministic data files under cfg.out_dir; the only
// timestamped output is run_meta.txt.
// ---------------------------------------------------------------------------

inline void append_run_meta(const RunConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.out_dir);
  std::ofstream meta(fs::path(cfg.out_dir) / "run_meta.txt", std::ios::app);
  meta << command << " at " << std::time(nullptr) << "\n";
}

inline fs::path out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

inline std::string run_vocab(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("data.dataset is required");
  const RawDataset raw = load_dataset_csv(cfg.dataset, cfg.max_len);
  std::vector<std::string> smiles_list;
  smiles_list.reserve(raw.rows.size());
  for (const auto& row : raw.rows) smiles_list.push_back(row.smiles);
  const Vocabulary vocab = Vocabulary::build(smiles_list);
  const auto path = out_path(cfg, "vocab.txt");
  vocab.save(path.string());
  append_run_meta(cfg, "vocab");
  return path.string();
}

struct TrainOutput {
  SsvaeModel model;
  ssvae::TrainHistory history;
  std::string checkpoint_path;
  int skipped_too_long = 0;
  int skipped_oov = 0;
};

inline TrainOutput run_train(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("data.dataset is required");
  RawDataset raw = load_dataset_csv(cfg.dataset, cfg.max_len);
  const int skipped_long = raw.skipped_too_long;
  PreparedData data = prepare(cfg, std::move(raw));

  nets::NetSpec spec;
  spec.vocab = data.vocab.size();
  spec.m = data.stats.property_count();
  spec.z_dim = cfg.z_dim;
  spec.hidden = cfg.hidden;
  spec.layers = cfg.layers;
  spec.max_len = cfg.max_len;

  long nl = 0, nu = 0;
  for (const auto& ex : data.train) (ex.label ? nl : nu) += 1;
  const ssvae::TrainConfig tc = make_train_config(cfg, nl, nu);

  ssvae::TrainResult result;
  if (!cfg.resume.empty()) {
    SsvaeModel prev = load_checkpoint(cfg.resume);
    if (prev.spec.vocab != spec.vocab || prev.spec.m != spec.m ||
        prev.spec.z_dim != spec.z_dim || prev.spec.hidden != spec.hidden ||
        prev.spec.layers != spec.layers) {
      throw ConfigError("checkpoint architecture does not match the configuration");
    }
    result = ssvae::train_from(spec, tc, std::move(prev.params), data.train,
                               data.validation, data.prior, data.stats);
  } else {
    result = ssvae::train(spec, tc, data.train, data.validation, data.prior,
                          data.stats);
  }

  TrainOutput out;
  out.model.spec = spec;
  out.model.params = std::move(result.params);
  out.model.vocab = data.vocab;
  out.model.stats = data.stats;
  out.model.prior = data.prior;
  out.model.training_set = data.train_smiles;
  out.history = std::move(result.history);
  out.skipped_too_long = skipped_long;
  out.skipped_oov = data.skipped_oov;

  out.model.vocab.save(out_path(cfg, "vocab.txt").string());
  out.checkpoint_path = out_path(cfg, "checkpoint.bin").string();
  save_checkpoint(out.checkpoint_path, out.model);
  ssvae::write_history_csv(out_path(cfg, "history.csv").string(), out.history,
                           out.model.stats.names);
  append_run_meta(cfg, "train");
  return out;
}

struct PredictOutput {
  std::vector<double> mae;  // empty when the dataset carries no labels
  long predicted = 0;
  long labeled = 0;
  int skipped_oov = 0;
};

inline PredictOutput run_predict(const RunConfig& cfg,
                                 const std::string& checkpoint_path,
                                 const std::string& dataset_path) {
  const SsvaeModel model = load_checkpoint(checkpoint_path);
  RawDataset raw = load_dataset_csv(dataset_path, model.spec.max_len);
  bool has_labels = !raw.property_names.empty();
  if (has_labels) {
    // match the model's property columns when present; ignore labels otherwise
    bool all_present = true;
    for (const auto& n : model.stats.names) {
      if (std::find(raw.property_names.begin(), raw.property_names.end(), n) ==
          raw.property_names.end()) {
        all_present = false;
      }
    }
    if (all_present) {
      raw = select_properties(std::move(raw), model.stats.names);
    } else {
      has_labels = false;
    }
  }

  PredictOutput out;
  csv::Writer w(out_path(cfg, "predictions.csv").string());
  std::vector<std::string> header{"smiles"};
  for (const auto& n : model.stats.names) header.push_back("pred_" + n);
  w.row(header);

  std::vector<std::vector<double>> preds, labels;
  for (const auto& row : raw.rows) {
    std::vector<std::string> line{row.smiles};
    try {
      const TokenSequence x = encode(row.smiles, model.vocab);
      const auto y = denormalize_label(
          ssvae::predict_normalized(model.spec, model.params, x), model.stats);
      for (double v : y) line.push_back(csv::fmt_double(v));
      out.predicted += 1;
      if (has_labels && row.label) {
        preds.push_back(y);
        labels.push_back(*row.label);
      }
    } catch (const OovError&) {
      out.skipped_oov += 1;
      for (std::size_t i = 0; i < model.stats.names.size(); ++i) line.push_back("");
    }
    w.row(line);
  }
  out.labeled = static_cast<long>(labels.size());
  if (!labels.empty()) {
    out.mae = ssvae::mae(preds, labels);
    csv::Writer mw(out_path(cfg, "mae.csv").string());
    mw.row({"property", "mae", "n"});
    for (std::size_t i = 0; i < out.mae.size(); ++i) {
      mw.row({model.stats.names[i], csv::fmt_double(out.mae[i]),
              std::to_string(out.labeled)});
    }
  }
  append_run_meta(cfg, "predict");
  return out;
}

struct GenerateOutput {
  std::vector<std::pair<GenerationCondition, gen::GenerationReport>> reports;
};

inline GenerateOutput run_generate(const RunConfig& cfg,
                                   const std::string& checkpoint_path) {
  const SsvaeModel model = load_checkpoint(checkpoint_path);
  const smiles::OracleSet oracles =
      cfg.logp_table.empty() ? smiles::OracleSet()
                             : smiles::OracleSet(smiles::LogpTable::load(cfg.logp_table));
  for (const auto& name : model.stats.names) {
    if (!oracles.has(name)) {
      throw ConfigError("no property oracle for '" + name +
                        "'; generated molecules cannot be labeled");
    }
  }
  const auto index = gen::make_training_index(model.training_set);

  const fs::path gen_dir = out_path(cfg, "gen");
  fs::create_directories(gen_dir);
  csv::Writer manifest((gen_dir / "conditions.csv").string());
  manifest.row({"label", "condition"});

  GenerateOutput out;
  for (const auto& cond : cfg.conditions) {
    gen::GenerationRequest request;
    for (const auto& [name, value] : cond.targets) {
      auto it = std::find(model.stats.names.begin(), model.stats.names.end(), name);
      if (it == model.stats.names.end()) {
        throw ConfigError("condition names unknown property '" + name + "'");
      }
      request.targets.emplace_back(
          static_cast<int>(it - model.stats.names.begin()), value);
    }
    request.count_goal = cfg.count_goal;
    request.trial_cap = cfg.trial_cap;
    request.beam_width = cfg.beam_width;
    request.max_len = model.spec.max_len;
    request.seed = derive_seed(cfg.seed, "generate-" + cond.label());

    gen::GenerationReport report = gen::generate(model, request, index, oracles);
    const fs::path dir = gen_dir / cond.label();
    fs::create_directories(dir);
    gen::write_report_csv((dir / "report.csv").string(), report);
    gen::write_new_unique_csv((dir / "new_unique.csv").string(), report,
                              model.stats.names);
    gen::write_histogram_csv((dir / "histogram.csv").string(), report,
                             model.stats.names);
    manifest.row({cond.label(), cond.spec_text()});
    out.reports.emplace_back(cond, std::move(report));
  }
  append_run_meta(cfg, "generate");
  return out;
}

// ---------------------------------------------------------------------------
// Report aggregation (Table 1/3-style summary of a finished run)
// ---------------------------------------------------------------------------

struct SummaryStats {
  long n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population convention
};

inline SummaryStats summarize(const std::vector<double>& xs) {
  SummaryStats s;
  s.n = static_cast<long>(xs.size());
  if (xs.empty()) return s;
  for (double v : xs) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  for (double v : xs) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(s.n));
  return s;
}

inline std::string run_report(const RunConfig& cfg) {
  const fs::path base(cfg.out_dir);
  const fs::path manifest_path = base / "gen" / "conditions.csv";
  std::vector<std::string> missing;
  if (!fs::exists(manifest_path)) missing.push_back(manifest_path.string());
  std::vector<std::pair<std::string, std::string>> conditions;
  if (missing.empty()) {
    const auto rows = csv::read_file(manifest_path.string());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      conditions.emplace_back(rows[i].fields.at(0), rows[i].fields.at(1));
    }
    for (const auto& [label, text] : conditions) {
      (void)text;
      for (const char* f : {"report.csv", "new_unique.csv"}) {
        const fs::path p = base / "gen" / label / f;
        if (!fs::exists(p)) missing.push_back(p.string());
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing report inputs:";
    for (const auto& m : missing) msg += " " + m;
    throw ConfigError(msg);
  }

  csv::Writer w((base / "summary.csv").string());
  w.row({"record", "condition", "property", "n", "mean", "std"});

  const fs::path mae_path = base / "mae.csv";
  if (fs::exists(mae_path)) {
    const auto rows = csv::read_file(mae_path.string());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      w.row({"mae", "", rows[i].fields.at(0), rows[i].fields.at(2),
             rows[i].fields.at(1), ""});
    }
  }

  for (const auto& [label, text] : conditions) {
    (void)text;
    const fs::path dir = base / "gen" / label;
    for (const auto& row : csv::read_file((dir / "report.csv").string())) {
      if (row.fields.at(0) == "outcome") continue;
      w.row({"count", label, row.fields.at(0), row.fields.at(1), "", ""});
    }
    const auto nu_rows = csv::read_file((dir / "new_unique.csv").string());
    if (nu_rows.empty()) throw ConfigError("empty new_unique.csv under " + label);
    const auto& header = nu_rows[0].fields;
    std::vector<std::vector<double>> columns(header.size() - 1);
    std::vector<double> lengths;
    for (std::size_t i = 1; i < nu_rows.size(); ++i) {
      const auto& f = nu_rows[i].fields;
      lengths.push_back(static_cast<double>(smiles::tokenize(f.at(0)).size()));
      for (std::size_t c = 1; c < f.size(); ++c) {
        columns[c - 1].push_back(std::strtod(f[c].c_str(), nullptr));
      }
    }
    const SummaryStats len_stats = summarize(lengths);
    w.row({"length", label, "sequence_length", std::to_string(len_stats.n),
           len_stats.n ? csv::fmt_double(len_stats.mean) : "",
           len_stats.n ? csv::fmt_double(len_stats.stddev) : ""});
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const SummaryStats st = summarize(columns[c]);
      w.row({"realized", label, header[c + 1], std::to_string(st.n),
             st.n ? csv::fmt_double(st.mean) : "",
             st.n ? csv::fmt_double(st.stddev) : ""});
    }
  }
  append_run_meta(cfg, "report");
  return (base / "summary.csv").string();
}

}  // namespace molvae::pipeline

#endif  // MOLVAE_PIPELINE_HPP
