//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_MODEL_HPP
#define MOLVAE_MODEL_HPP

#include <string>
#include <vector>

#include "molvae/corpus.hpp"
#include "molvae/gaussian.hpp"
#include "molvae/nets.hpp"

namespace molvae {

// Everything needed to predict and generate: the trained parameters plus the
// artifacts they were trained against. This is the unit the checkpoint file
// stores.
struct SsvaeModel {
  nets::NetSpec spec;
  ad::ParamStore params;
  Vocabulary vocab;
  NormalizationStats stats;        // property names + original-unit moments
  GaussianPrior prior;             // fitted over normalized labeled y
  std::vector<std::string> training_set;  // train-split SMILES for novelty checks
};

// Point property prediction in original units.
inline std::vector<double> predict(const SsvaeModel& model, const std::string& s) {
  const TokenSequence x = encode(s, model.vocab);
  const auto mean = nets::predictor_moments(model.spec, model.params, x).mean;
  return denormalize_label(mean, model.stats);
}

}  // namespace molvae

#endif  // MOLVAE_MODEL_HPP
