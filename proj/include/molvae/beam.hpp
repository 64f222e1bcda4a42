//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_BEAM_HPP
#define MOLVAE_BEAM_HPP

#include <algorithm>
#include <vector>

#include "molvae/corpus.hpp"
#include "molvae/nets.hpp"

namespace molvae::gen {

struct BeamHypothesis {
  std::vector<int> tokens;  // includes the terminal when finished
  double logp = 0.0;
  bool finished = false;
};

// Deterministic ordering: higher cumulative log-probability first; ties go
// to the hypothesis that emitted the terminal earlier, then to lexicographic
// token order.
inline bool beam_better(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.logp != b.logp) return a.logp > b.logp;
  const std::size_t ta = a.finished ? a.tokens.size() : std::size_t(-1);
  const std::size_t tb = b.finished ? b.tokens.size() : std::size_t(-1);
  if (ta != tb) return ta < tb;
  return a.tokens < b.tokens;
}

namespace detail {

inline BeamHypothesis greedy_rollout(const nets::DecoderSession& session,
                                     int max_len) {
  BeamHypothesis h;
  auto state = session.start();
  for (int step = 0; step < max_len; ++step) {
    const auto lp = session.log_probs(state);
    int best = 0;
    for (int v = 1; v < static_cast<int>(lp.size()); ++v) {
      if (lp[v] > lp[best]) best = v;
    }
    h.tokens.push_back(best);
    h.logp += lp[best];
    if (best == Vocabulary::kTerminalIndex) {
      h.finished = true;
      return h;
    }
    state = session.advance(state, best);
  }
  return h;
}

}  // namespace detail

// Breadth-first top-K search over the decoder's autoregressive distribution.
// Finished hypotheses stay in the pool and compete with new expansions.
// Returns the best finished hypothesis, or the best unfinished one when
// nothing terminates within max_len tokens (the caller treats that as
// invalid). The result is floored at the greedy rollout: plain top-K pruning
// can drop the greedy path and end below it, and downstream accounting
// relies on beam >= greedy.
inline BeamHypothesis beam_search(const nets::DecoderSession& session,
                                  int beam_width, int max_len) {
  struct Alive {
    BeamHypothesis hyp;
    nets::DecoderSession::State state;
  };

  std::vector<Alive> frontier;
  frontier.push_back({BeamHypothesis{}, session.start()});
  std::vector<BeamHypothesis> finished;

  for (int step = 0; step < max_len && !frontier.empty(); ++step) {
    struct Candidate {
      BeamHypothesis hyp;
      int parent = -1;  // -1 for already-finished entries
    };
    std::vector<Candidate> candidates;
    candidates.reserve(finished.size() + frontier.size() * 8);
    for (auto& f : finished) candidates.push_back({std::move(f), -1});
    finished.clear();
    for (int p = 0; p < static_cast<int>(frontier.size()); ++p) {
      const auto lp = session.log_probs(frontier[p].state);
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        Candidate c;
        c.hyp.tokens = frontier[p].hyp.tokens;
        c.hyp.tokens.push_back(v);
        c.hyp.logp = frontier[p].hyp.logp + lp[v];
        c.hyp.finished = (v == Vocabulary::kTerminalIndex);
        c.parent = p;
        candidates.push_back(std::move(c));
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                return beam_better(a.hyp, b.hyp);
              });
    if (static_cast<int>(candidates.size()) > beam_width) {
      candidates.resize(beam_width);
    }
    std::vector<Alive> next;
    for (auto& c : candidates) {
      if (c.hyp.finished) {
        finished.push_back(std::move(c.hyp));
      } else {
        const int tok = c.hyp.tokens.back();
        next.push_back({std::move(c.hyp),
                        session.advance(frontier[c.parent].state, tok)});
      }
    }
    frontier = std::move(next);
  }

  BeamHypothesis best;
  bool have = false;
  for (const auto& h : finished) {
    if (!have || beam_better(h, best)) {
      best = h;
      have = true;
    }
  }
  if (!have) {
    for (const auto& a : frontier) {
      if (!have || beam_better(a.hyp, best)) {
        best = a.hyp;
        have = true;
      }
    }
  }

  const BeamHypothesis greedy = detail::greedy_rollout(session, max_len);
  if (!have || (greedy.finished && !best.finished) ||
      (greedy.finished == best.finished && beam_better(greedy, best))) {
    return greedy;
  }
  return best;
}

}  // namespace molvae::gen

#endif  // MOLVAE_BEAM_HPP
