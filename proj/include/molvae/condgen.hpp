//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_CONDGEN_HPP
#define MOLVAE_CONDGEN_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "molvae/beam.hpp"
#include "molvae/csv.hpp"
#include "molvae/gaussian.hpp"
#include "molvae/model.hpp"
#include "molvae/properties.hpp"
#include "molvae/rng.hpp"

namespace molvae::gen {

struct GenerationRequest {
  // (property index, target value in original units); empty = unconditional
  std::vector<std::pair<int, double>> targets;
  int count_goal = 3000;
  int trial_cap = 10000;
  int beam_width = 5;
  int max_len = 120;  // total tokens including the terminal
  std::uint64_t seed = 0;

  void check(int m) const {
    std::vector<char> seen(m, 0);
    for (const auto& [idx, value] : targets) {
      if (idx < 0 || idx >= m) throw std::invalid_argument("target index out of range");
      if (seen[idx]) throw std::invalid_argument("duplicate target index");
      seen[idx] = 1;
      (void)value;
    }
    if (count_goal > trial_cap) {
      throw std::invalid_argument("count_goal must not exceed trial_cap");
    }
  }
};

// Table-2-style accounting. generated = invalid + in_training_set +
// duplicated + new_unique always holds.
struct GenerationReport {
  long generated = 0;
  long invalid = 0;
  long in_training_set = 0;
  long duplicated = 0;
  long new_unique = 0;
  std::vector<std::string> new_unique_smiles;
  std::vector<std::vector<double>> new_unique_properties;  // original units
};

// Conditional generation loop: per trial, draw y from the (conditional)
// prior with fixed entries pinned to the normalized targets, draw z from
// N(0,I), beam-decode, and classify the decoded string. Stops after
// count_goal new-unique strings or trial_cap trials. Hypotheses that hit the
// length cap unfinished count as invalid. Trial t draws from its own seed
// stream, so replaying a seed replays the report.
inline GenerationReport generate(const SsvaeModel& model,
                                 const GenerationRequest& request,
                                 const std::unordered_set<std::string>& training_index,
                                 const smiles::OracleSet& oracles) {
  const int m = model.spec.m;
  request.check(m);
  std::vector<std::pair<int, double>> norm_targets;
  norm_targets.reserve(request.targets.size());
  for (const auto& [idx, value] : request.targets) {
    norm_targets.emplace_back(
        idx, (value - model.stats.mean[idx]) / model.stats.stddev[idx]);
  }

  GenerationReport report;
  std::unordered_set<std::string> seen;
  for (int trial = 0; trial < request.trial_cap; ++trial) {
    if (report.new_unique >= request.count_goal) break;
    Rng rng(derive_seed(request.seed, "trial", static_cast<std::uint64_t>(trial)));
    const std::vector<double> y = sample_y(model.prior, norm_targets, rng);
    const std::vector<double> z = rng.normal_vec(model.spec.z_dim);
    nets::DecoderSession session(model.spec, model.params, y, z);
    const BeamHypothesis hyp =
        beam_search(session, request.beam_width, request.max_len);

    report.generated += 1;
    if (!hyp.finished) {
      report.invalid += 1;
      continue;
    }
    const std::string s = decode(hyp.tokens, model.vocab);
    const auto verdict = smiles::validate(s);
    if (!verdict.valid) {
      report.invalid += 1;
    } else if (training_index.count(s)) {
      report.in_training_set += 1;
    } else if (seen.count(s)) {
      report.duplicated += 1;
    } else {
      seen.insert(s);
      report.new_unique += 1;
      report.new_unique_smiles.push_back(s);
      report.new_unique_properties.push_back(
          oracles.evaluate_all(model.stats.names, smiles::parse_molecule(s)));
    }
  }
  return report;
}

inline std::unordered_set<std::string> make_training_index(
    const std::vector<std::string>& smiles_list) {
  return {smiles_list.begin(), smiles_list.end()};
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

inline void write_report_csv(const std::string& path, const GenerationReport& r) {
  csv::Writer w(path);
  w.row({"outcome", "count"});
  w.row({"generated", std::to_string(r.generated)});
  w.row({"invalid", std::to_string(r.invalid)});
  w.row({"in_training_set", std::to_string(r.in_training_set)});
  w.row({"duplicated", std::to_string(r.duplicated)});
  w.row({"new_unique", std::to_string(r.new_unique)});
}

inline void write_new_unique_csv(const std::string& path, const GenerationReport& r,
                                 const std::vector<std::string>& property_names) {
  csv::Writer w(path);
  std::vector<std::string> header{"smiles"};
  header.insert(header.end(), property_names.begin(), property_names.end());
  w.row(header);
  for (std::size_t i = 0; i < r.new_unique_smiles.size(); ++i) {
    std::vector<std::string> row{r.new_unique_smiles[i]};
    for (double v : r.new_unique_properties[i]) row.push_back(csv::fmt_double(v));
    w.row(row);
  }
}

// Fixed-width histogram per property over the new-unique set.
inline void write_histogram_csv(const std::string& path, const GenerationReport& r,
                                const std::vector<std::string>& property_names,
                                int bins = 30) {
  csv::Writer w(path);
  w.row({"property", "bin_left", "bin_right", "count"});
  for (std::size_t p = 0; p < property_names.size(); ++p) {
    if (r.new_unique_properties.empty()) continue;
    double lo = r.new_unique_properties[0][p], hi = lo;
    for (const auto& v : r.new_unique_properties) {
      lo = std::min(lo, v[p]);
      hi = std::max(hi, v[p]);
    }
    double width = (hi - lo) / bins;
    if (width <= 0.0) width = 1.0;
    std::vector<long> counts(bins, 0);
    for (const auto& v : r.new_unique_properties) {
      int b = static_cast<int>((v[p] - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      counts[b] += 1;
    }
    for (int b = 0; b < bins; ++b) {
      w.row({property_names[p], csv::fmt_double(lo + b * width),
             csv::fmt_double(lo + (b + 1) * width), std::to_string(counts[b])});
    }
  }
}

}  // namespace molvae::gen

#endif  // MOLVAE_CONDGEN_HPP
