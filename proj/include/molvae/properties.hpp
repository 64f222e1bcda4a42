//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_PROPERTIES_HPP
#define MOLVAE_PROPERTIES_HPP

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "molvae/csv.hpp"
#include "molvae/smiles.hpp"

namespace molvae::smiles {

// Reduced additive LogP proxy: one contribution per (element, aromatic)
// pair plus a per-hydrogen term (the H row). Deliberately much coarser than
// the Wildman-Crippen atom typing; it only has to be deterministic and
// self-contained.
class LogpTable {
 public:
  int version = 1;

  void set(const std::string& element, bool aromatic, double value) {
    rows_[{element, aromatic}] = value;
  }

  // Unknown (element, aromatic) keys contribute 0 and emit a warning once
  // per table instance.
  double contribution(const std::string& element, bool aromatic) const {
    auto it = rows_.find({element, aromatic});
    if (it == rows_.end()) {
      if (!warned_) {
        warned_ = true;
        std::cerr << "molvae: warning: no LogP contribution for " << element
                  << (aromatic ? " (aromatic)" : "") << ", using 0\n";
      }
      return 0.0;
    }
    return it->second;
  }

  double hydrogen_contribution() const { return contribution("H", false); }

  const std::map<std::pair<std::string, bool>, double>& rows() const {
    return rows_;
  }

  void save(const std::string& path) const {
    csv::Writer w(path);
    w.raw("#version=" + std::to_string(version) + "\n");
    w.row({"element", "aromatic", "contribution"});
    for (const auto& [key, value] : rows_) {
      w.row({key.first, key.second ? "1" : "0", csv::fmt_double(value)});
    }
  }

  static LogpTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open LogP table " + path);
    std::string line;
    if (!std::getline(in, line)) {
      throw std::runtime_error("empty LogP table " + path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LogpTable t;
    if (line.rfind("#version=", 0) != 0) {
      throw std::runtime_error("LogP table " + path + " missing version header");
    }
    t.version = std::atoi(line.c_str() + 9);
    if (t.version != 1) {
      throw std::runtime_error("unsupported LogP table version " +
                               std::to_string(t.version));
    }
    bool saw_header = false;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto f = csv::split_line(line);
      if (!saw_header) {
        if (f != std::vector<std::string>{"element", "aromatic", "contribution"}) {
          throw std::runtime_error("bad LogP table header in " + path);
        }
        saw_header = true;
        continue;
      }
      if (f.size() != 3) throw std::runtime_error("bad LogP table row: " + line);
      t.set(f[0], f[1] == "1", std::strtod(f[2].c_str(), nullptr));
    }
    return t;
  }

 private:
  std::map<std::pair<std::string, bool>, double> rows_;
  mutable bool warned_ = false;
};

inline const LogpTable& builtin_logp_table() {
  static const LogpTable table = [] {
    LogpTable t;
    t.set("H", false, 0.1230);
    t.set("B", false, -0.0400);
    t.set("C", false, 0.1441);
    t.set("C", true, 0.1581);
    t.set("N", false, -0.6000);
    t.set("N", true, -0.3239);
    t.set("O", false, -0.2893);
    t.set("O", true, 0.1552);
    t.set("F", false, 0.4202);
    t.set("P", false, 0.8612);
    t.set("P", true, 0.8612);
    t.set("S", false, 0.6482);
    t.set("S", true, 0.6237);
    t.set("Si", false, 0.3000);
    t.set("Cl", false, 0.6895);
    t.set("Br", false, 0.8456);
    t.set("Sn", false, 0.5000);
    t.set("I", false, 0.8857);
    return t;
  }();
  return table;
}

// Additive LogP proxy over atoms plus the hydrogen term. Charges ignored.
inline double logp_proxy(const MoleculeGraph& g,
                         const LogpTable& table = builtin_logp_table()) {
  double v = 0.0;
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    v += table.contribution(g.atoms[i].element, g.atoms[i].aromatic);
    const int h = g.implicit_h.empty() ? 0 : g.implicit_h[i];
    v += h * table.hydrogen_contribution();
  }
  return v;
}

// Named property oracles used both to label datasets and to audit generated
// molecules. Additional properties can be registered by the caller.
class OracleSet {
 public:
  using Fn = std::function<double(const MoleculeGraph&)>;

  OracleSet() {
    add("MolWt", [](const MoleculeGraph& g) { return mol_weight(g); });
    add("LogP", [](const MoleculeGraph& g) { return logp_proxy(g); });
  }

  explicit OracleSet(const LogpTable& table) {
    add("MolWt", [](const MoleculeGraph& g) { return mol_weight(g); });
    add("LogP", [table](const MoleculeGraph& g) { return logp_proxy(g, table); });
  }

  void add(const std::string& name, Fn fn) { fns_[name] = std::move(fn); }

  bool has(const std::string& name) const { return fns_.count(name) != 0; }

  double evaluate(const std::string& name, const MoleculeGraph& g) const {
    auto it = fns_.find(name);
    if (it == fns_.end()) {
      throw std::runtime_error("no property oracle named " + name);
    }
    return it->second(g);
  }

  std::vector<double> evaluate_all(const std::vector<std::string>& names,
                                   const MoleculeGraph& g) const {
    std::vector<double> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(evaluate(n, g));
    return out;
  }

 private:
  std::map<std::string, Fn> fns_;
};

}  // namespace molvae::smiles

#endif  // MOLVAE_PROPERTIES_HPP
