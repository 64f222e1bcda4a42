//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_SMILES_HPP
#define MOLVAE_SMILES_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace molvae::smiles {

// Failure classes reported by validate(). Order matches the pipeline stage
// where each failure is detected.
enum class Failure {
  none,
  lex_error,
  unbalanced_parentheses,
  unclosed_ring,
  valence_violation,
  kekulization_failure,
};

inline const char* to_string(Failure f) {
  switch (f) {
    case Failure::none: return "none";
    case Failure::lex_error: return "lex_error";
    case Failure::unbalanced_parentheses: return "unbalanced_parentheses";
    case Failure::unclosed_ring: return "unclosed_ring";
    case Failure::valence_violation: return "valence_violation";
    case Failure::kekulization_failure: return "kekulization_failure";
  }
  return "?";
}

struct SmilesError : std::runtime_error {
  SmilesError(Failure k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
  Failure kind;
};

struct ValidityVerdict {
  bool valid = false;
  Failure failure = Failure::none;  // none iff valid
  std::string detail;
};

enum class BondOrder { single = 1, double_bond = 2, triple = 3, aromatic = 4 };

// Contribution of a bond towards an atom's valence; aromatic counts 1.5.
inline double bond_valence(BondOrder o) {
  switch (o) {
    case BondOrder::single: return 1.0;
    case BondOrder::double_bond: return 2.0;
    case BondOrder::triple: return 3.0;
    case BondOrder::aromatic: return 1.5;
  }
  return 0.0;
}

struct Atom {
  std::string element;          // canonical symbol, e.g. "N" for token 'n'
  bool aromatic = false;        // written lowercase
  int formal_charge = 0;        // bracket atoms only; 0 otherwise
  std::optional<int> explicit_h;  // present iff bracketed
  bool bracketed = false;
};

struct Bond {
  int a = -1, b = -1;  // atom indices, a < b not required but distinct
  BondOrder order = BondOrder::single;
};

struct MoleculeGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<int> implicit_h;  // per atom; filled by assign_implicit_hydrogens
  int ring_closure_bonds = 0;   // bonds created by pairing ring digits

  std::vector<int> bonds_at(int atom) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(bonds.size()); ++i) {
      if (bonds[i].a == atom || bonds[i].b == atom) out.push_back(i);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Symbol alphabet (the 35 tokens of the training vocabulary).
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& two_char_symbols() {
  static const std::vector<std::string> k{"Si", "Cl", "Br", "Sn"};
  return k;
}

inline bool is_single_symbol(char c) {
  static constexpr std::string_view k = "123456789+-=#()[]HBCNOFPSIcnops";
  return k.find(c) != std::string_view::npos;
}

// Splits s into vocabulary symbols. Two-character atoms are matched by
// maximal munch before single characters. Throws lex_error on anything
// outside the alphabet (including stereo symbols @ / \).
inline std::vector<std::string> tokenize(std::string_view s) {
  if (s.empty()) throw SmilesError(Failure::lex_error, "empty SMILES string");
  std::vector<std::string> tokens;
  tokens.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size()) {
      const std::string_view pair = s.substr(i, 2);
      bool matched = false;
      for (const auto& t : two_char_symbols()) {
        if (pair == t) {
          tokens.emplace_back(t);
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    const char c = s[i];
    if (!is_single_symbol(c)) {
      throw SmilesError(Failure::lex_error,
                        std::string("character '") + c + "' at position " +
                            std::to_string(i) + " is not in the alphabet");
    }
    tokens.emplace_back(1, c);
    ++i;
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Valence and mass tables.
// ---------------------------------------------------------------------------

struct ElementInfo {
  const char* symbol;
  double mass;
  std::array<int, 3> valences;  // allowed valences, ascending, 0 = unused
};

inline const std::vector<ElementInfo>& element_table() {
  static const std::vector<ElementInfo> k{
      {"H", 1.008, {1, 0, 0}},    {"B", 10.81, {3, 0, 0}},
      {"C", 12.011, {4, 0, 0}},   {"N", 14.007, {3, 5, 0}},
      {"O", 15.999, {2, 0, 0}},   {"F", 18.998, {1, 0, 0}},
      {"Si", 28.085, {4, 0, 0}},  {"P", 30.974, {3, 5, 0}},
      {"S", 32.06, {2, 4, 6}},    {"Cl", 35.45, {1, 0, 0}},
      {"Br", 79.904, {1, 0, 0}},  {"Sn", 118.71, {2, 4, 0}},
      {"I", 126.904, {1, 0, 0}},
  };
  return k;
}

inline const ElementInfo* find_element(std::string_view symbol) {
  for (const auto& e : element_table()) {
    if (symbol == e.symbol) return &e;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_aliphatic_atom_token(const std::string& t) {
  static const std::vector<std::string> k{"B",  "C",  "N",  "O", "F",  "P", "S",
                                          "I",  "Si", "Cl", "Br", "Sn"};
  return std::find(k.begin(), k.end(), t) != k.end();
}

inline bool is_aromatic_atom_token(const std::string& t) {
  return t.size() == 1 && std::string_view("cnops").find(t[0]) !=
                              std::string_view::npos;
}

inline std::string uppercase_symbol(const std::string& t) {
  std::string s = t;
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline bool is_digit_token(const std::string& t) {
  return t.size() == 1 && t[0] >= '1' && t[0] <= '9';
}

struct RingOpen {
  int atom;
  std::optional<BondOrder> order;
};

}  // namespace detail

// Builds the molecular graph from a token stream: depth-first chain with
// branch parentheses and ring-closure digits. Bond symbols apply to the
// next attachment (atom or ring digit). Throws SmilesError with the failure
// class of the first problem found.
inline MoleculeGraph parse(const std::vector<std::string>& tokens) {
  MoleculeGraph g;
  std::vector<int> branch_stack;
  std::unordered_map<char, detail::RingOpen> open_rings;
  int prev_atom = -1;
  std::optional<BondOrder> pending_bond;

  auto has_bond_between = [&](int a, int b) {
    for (const auto& bd : g.bonds) {
      if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a)) return true;
    }
    return false;
  };

  auto add_atom = [&](Atom atom) {
    g.atoms.push_back(std::move(atom));
    const int idx = static_cast<int>(g.atoms.size()) - 1;
    if (prev_atom >= 0) {
      BondOrder order;
      if (pending_bond) {
        order = *pending_bond;
      } else {
        order = (g.atoms[prev_atom].aromatic && g.atoms[idx].aromatic)
                    ? BondOrder::aromatic
                    : BondOrder::single;
      }
      g.bonds.push_back({prev_atom, idx, order});
    } else if (pending_bond) {
      throw SmilesError(Failure::lex_error, "bond symbol before any atom");
    }
    pending_bond.reset();
    prev_atom = idx;
  };

  std::size_t i = 0;
  const std::size_t n = tokens.size();
  while (i < n) {
    const std::string& t = tokens[i];
    if (detail::is_aliphatic_atom_token(t)) {
      add_atom(Atom{t, false, 0, std::nullopt, false});
      ++i;
    } else if (detail::is_aromatic_atom_token(t)) {
      add_atom(Atom{detail::uppercase_symbol(t), true, 0, std::nullopt, false});
      ++i;
    } else if (t == "H") {
      throw SmilesError(Failure::lex_error,
                        "hydrogen symbol outside a bracket atom");
    } else if (t == "[") {
      // bracket atom: [ element (H count?)? (charge)? ]
      ++i;
      if (i >= n) throw SmilesError(Failure::lex_error, "unterminated bracket");
      Atom atom;
      atom.bracketed = true;
      atom.explicit_h = 0;
      const std::string& el = tokens[i];
      if (detail::is_aliphatic_atom_token(el) || el == "H") {
        atom.element = el;
      } else if (detail::is_aromatic_atom_token(el)) {
        atom.element = detail::uppercase_symbol(el);
        atom.aromatic = true;
      } else {
        throw SmilesError(Failure::lex_error,
                          "malformed bracket atom: expected element, got '" +
                              el + "'");
      }
      ++i;
      // hydrogen count; only valid when the element itself is not H
      if (i < n && tokens[i] == "H" && atom.element != "H") {
        int count = 1;
        ++i;
        if (i < n && detail::is_digit_token(tokens[i])) {
          count = tokens[i][0] - '0';
          ++i;
        }
        atom.explicit_h = count;
      }
      // charge: run of + or -, or a single sign followed by one digit
      if (i < n && (tokens[i] == "+" || tokens[i] == "-")) {
        const std::string sign = tokens[i];
        int count = 0;
        while (i < n && tokens[i] == sign) {
          ++count;
          ++i;
        }
        if (count == 1 && i < n && detail::is_digit_token(tokens[i])) {
          count = tokens[i][0] - '0';
          ++i;
        }
        atom.formal_charge = (sign == "+") ? count : -count;
      }
      if (i >= n || tokens[i] != "]") {
        throw SmilesError(Failure::lex_error, "malformed bracket atom: missing ]");
      }
      ++i;
      add_atom(std::move(atom));
    } else if (t == "]") {
      throw SmilesError(Failure::lex_error, "] without matching [");
    } else if (t == "=" || t == "#" || (t == "-")) {
      if (pending_bond) {
        throw SmilesError(Failure::lex_error, "two consecutive bond symbols");
      }
      pending_bond = (t == "=")   ? BondOrder::double_bond
                     : (t == "#") ? BondOrder::triple
                                  : BondOrder::single;
      ++i;
    } else if (t == "+") {
      throw SmilesError(Failure::lex_error, "charge symbol outside a bracket");
    } else if (t == "(") {
      if (prev_atom < 0) {
        throw SmilesError(Failure::lex_error, "branch before any atom");
      }
      if (pending_bond) {
        throw SmilesError(Failure::lex_error, "bond symbol before branch open");
      }
      branch_stack.push_back(prev_atom);
      ++i;
    } else if (t == ")") {
      if (branch_stack.empty()) {
        throw SmilesError(Failure::unbalanced_parentheses,
                          "close parenthesis without open");
      }
      if (pending_bond) {
        throw SmilesError(Failure::lex_error, "dangling bond before branch close");
      }
      prev_atom = branch_stack.back();
      branch_stack.pop_back();
      ++i;
    } else if (detail::is_digit_token(t)) {
      if (prev_atom < 0) {
        throw SmilesError(Failure::lex_error, "ring digit before any atom");
      }
      const char digit = t[0];
      auto it = open_rings.find(digit);
      if (it == open_rings.end()) {
        open_rings.emplace(digit, detail::RingOpen{prev_atom, pending_bond});
        pending_bond.reset();
      } else {
        const detail::RingOpen open = it->second;
        open_rings.erase(it);
        if (open.atom == prev_atom) {
          throw SmilesError(Failure::lex_error, "ring closure onto the same atom");
        }
        if (has_bond_between(open.atom, prev_atom)) {
          throw SmilesError(Failure::lex_error,
                            "duplicate bond between ring atoms");
        }
        BondOrder order;
        if (open.order && pending_bond && *open.order != *pending_bond) {
          throw SmilesError(Failure::lex_error, "conflicting ring bond orders");
        } else if (open.order) {
          order = *open.order;
        } else if (pending_bond) {
          order = *pending_bond;
        } else {
          order = (g.atoms[open.atom].aromatic && g.atoms[prev_atom].aromatic)
                      ? BondOrder::aromatic
                      : BondOrder::single;
        }
        pending_bond.reset();
        g.bonds.push_back({open.atom, prev_atom, order});
        g.ring_closure_bonds += 1;
      }
      ++i;
    } else {
      throw SmilesError(Failure::lex_error, "unexpected token '" + t + "'");
    }
  }

  if (pending_bond) {
    throw SmilesError(Failure::lex_error, "dangling bond at end of string");
  }
  if (!open_rings.empty()) {
    throw SmilesError(Failure::unclosed_ring,
                      std::to_string(open_rings.size()) + " unclosed ring digit(s)");
  }
  if (!branch_stack.empty()) {
    throw SmilesError(Failure::unbalanced_parentheses,
                      std::to_string(branch_stack.size()) + " unclosed branch(es)");
  }
  if (g.atoms.empty()) {
    throw SmilesError(Failure::lex_error, "no atoms");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Implicit hydrogens
// ---------------------------------------------------------------------------

// Bond-order sum at an atom with aromatic bonds counted 1.5, rounded up.
inline int rounded_bond_sum(const MoleculeGraph& g, int atom) {
  double s = 0.0;
  for (const auto& b : g.bonds) {
    if (b.a == atom || b.b == atom) s += bond_valence(b.order);
  }
  return static_cast<int>(std::ceil(s - 1e-9));
}

// Fills g.implicit_h. Unbracketed atoms get (smallest allowed valence >=
// rounded bond sum) - sum; bracketed atoms carry their explicit count.
// Throws valence_violation when the bond sum exceeds the largest allowed
// valence of the element.
inline MoleculeGraph assign_implicit_hydrogens(MoleculeGraph g) {
  g.implicit_h.assign(g.atoms.size(), 0);
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    const Atom& a = g.atoms[i];
    const ElementInfo* el = find_element(a.element);
    if (el == nullptr) {
      throw SmilesError(Failure::lex_error, "unknown element " + a.element);
    }
    const int sum = rounded_bond_sum(g, static_cast<int>(i));
    int max_val = 0;
    for (int v : el->valences) max_val = std::max(max_val, v);
    if (sum > max_val) {
      throw SmilesError(Failure::valence_violation,
                        a.element + " with bond order sum " +
                            std::to_string(sum) + " exceeds valence " +
                            std::to_string(max_val));
    }
    if (a.bracketed) {
      g.implicit_h[i] = a.explicit_h.value_or(0);
    } else {
      int chosen = max_val;
      for (int v : el->valences) {
        if (v >= sum) {
          chosen = v;
          break;
        }
      }
      g.implicit_h[i] = chosen - sum;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Kekulization
// ---------------------------------------------------------------------------

namespace detail {

// Per-atom demand for one extra valence unit from the aromatic system.
// fixed = non-aromatic bond orders + one per aromatic bond + hydrogens.
// demand 0 if fixed is an allowed valence, 1 if fixed+1 is, otherwise the
// atom cannot be kekulized at all.
inline std::optional<std::vector<int>> aromatic_demands(const MoleculeGraph& g) {
  std::vector<int> demand(g.atoms.size(), 0);
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    if (!g.atoms[i].aromatic) continue;
    double fixed = 0.0;
    for (const auto& b : g.bonds) {
      if (b.a != static_cast<int>(i) && b.b != static_cast<int>(i)) continue;
      fixed += (b.order == BondOrder::aromatic) ? 1.0 : bond_valence(b.order);
    }
    fixed += g.implicit_h.empty() ? 0 : g.implicit_h[i];
    const int f = static_cast<int>(std::lround(fixed));
    const ElementInfo* el = find_element(g.atoms[i].element);
    bool f_ok = false, f1_ok = false;
    for (int v : el->valences) {
      if (v == f) f_ok = true;
      if (v == f + 1) f1_ok = true;
    }
    if (f_ok) {
      demand[i] = 0;
    } else if (f1_ok) {
      demand[i] = 1;
    } else {
      return std::nullopt;
    }
  }
  return demand;
}

inline bool match_backtrack(const std::vector<std::vector<std::pair<int, int>>>& adj,
                            std::vector<int>& matched_bond,
                            std::vector<char>& done, int from) {
  const int n = static_cast<int>(done.size());
  int u = -1;
  for (int i = from; i < n; ++i) {
    if (!done[i]) {
      u = i;
      break;
    }
  }
  if (u < 0) return true;
  done[u] = 1;
  for (const auto& [v, bond] : adj[u]) {
    if (done[v]) continue;
    done[v] = 1;
    matched_bond.push_back(bond);
    if (match_backtrack(adj, matched_bond, done, u + 1)) return true;
    matched_bond.pop_back();
    done[v] = 0;
  }
  done[u] = 0;
  return false;
}

}  // namespace detail

// Attempts to assign each aromatic bond single or double so that every
// aromatic atom needing one extra valence unit receives exactly one double
// bond (backtracking perfect matching over the demanding atoms). Returns the
// per-bond assignment (non-aromatic bonds unchanged) or nullopt.
inline std::optional<std::vector<BondOrder>> kekulize(const MoleculeGraph& g) {
  auto demands = detail::aromatic_demands(g);
  if (!demands) return std::nullopt;

  // map demanding atoms to dense ids
  std::vector<int> dense(g.atoms.size(), -1);
  int n_demand = 0;
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    if (g.atoms[i].aromatic && (*demands)[i] == 1) {
      dense[i] = n_demand++;
    }
  }
  std::vector<BondOrder> assignment;
  assignment.reserve(g.bonds.size());
  for (const auto& b : g.bonds) {
    assignment.push_back(b.order == BondOrder::aromatic ? BondOrder::single
                                                        : b.order);
  }
  if (n_demand == 0) return assignment;
  if (n_demand % 2 != 0) return std::nullopt;

  // adjacency restricted to aromatic bonds between two demanding atoms
  std::vector<std::vector<std::pair<int, int>>> adj(n_demand);
  for (int bi = 0; bi < static_cast<int>(g.bonds.size()); ++bi) {
    const Bond& b = g.bonds[bi];
    if (b.order != BondOrder::aromatic) continue;
    if (dense[b.a] >= 0 && dense[b.b] >= 0) {
      adj[dense[b.a]].push_back({dense[b.b], bi});
      adj[dense[b.b]].push_back({dense[b.a], bi});
    }
  }
  std::vector<int> matched_bond;
  std::vector<char> done(n_demand, 0);
  if (!detail::match_backtrack(adj, matched_bond, done, 0)) return std::nullopt;
  for (int bi : matched_bond) assignment[bi] = BondOrder::double_bond;
  return assignment;
}

inline bool kekulize_check(const MoleculeGraph& g) {
  return kekulize(g).has_value();
}

// ---------------------------------------------------------------------------
// validate / properties
// ---------------------------------------------------------------------------

// Total validity check: tokenize -> parse -> hydrogens -> kekulize. Never
// throws; the first failure is reported as data.
inline ValidityVerdict validate(std::string_view s) noexcept {
  try {
    const auto tokens = tokenize(s);
    MoleculeGraph g = assign_implicit_hydrogens(parse(tokens));
    if (!kekulize_check(g)) {
      return {false, Failure::kekulization_failure,
              "no single/double assignment satisfies the aromatic atoms"};
    }
    return {true, Failure::none, ""};
  } catch (const SmilesError& e) {
    return {false, e.kind, e.what()};
  } catch (const std::exception& e) {
    return {false, Failure::lex_error, e.what()};
  }
}

// Parses and assigns hydrogens in one go; throws SmilesError on failure.
inline MoleculeGraph parse_molecule(std::string_view s) {
  return assign_implicit_hydrogens(parse(tokenize(s)));
}

// Sum of atomic masses plus 1.008 per hydrogen. Charges do not affect mass.
inline double mol_weight(const MoleculeGraph& g) {
  double w = 0.0;
  long hydrogens = 0;
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    w += find_element(g.atoms[i].element)->mass;
    hydrogens += g.implicit_h.empty() ? 0 : g.implicit_h[i];
  }
  return w + 1.008 * static_cast<double>(hydrogens);
}

inline int total_hydrogens(const MoleculeGraph& g) {
  int h = 0;
  for (int x : g.implicit_h) h += x;
  return h;
}

}  // namespace molvae::smiles

#endif  // MOLVAE_SMILES_HPP
