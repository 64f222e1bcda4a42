//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#ifndef MOLVAE_CONFIG_HPP
#define MOLVAE_CONFIG_HPP

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "molvae/csv.hpp"

namespace molvae {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat INI: [section] headers, key = value lines, # or ; comments. emit()
// writes sections and keys sorted, so parse(emit(parse(x))) == parse(x).
class Ini {
 public:
  using Section = std::map<std::string, std::string>;

  static Ini parse(const std::string& text) {
    Ini ini;
    std::istringstream in(text);
    std::string line, section;
    long n = 0;
    while (std::getline(in, line)) {
      ++n;
      std::string t = csv::trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']') {
          throw ConfigError("line " + std::to_string(n) + ": bad section header");
        }
        section = csv::trim(t.substr(1, t.size() - 2));
        ini.sections_[section];
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(n) + ": expected key = value");
      }
      const std::string key = csv::trim(t.substr(0, eq));
      const std::string value = csv::trim(t.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(n) + ": empty key");
      ini.sections_[section][key] = value;
    }
    return ini;
  }

  static Ini load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  std::string emit() const {
    std::string out;
    for (const auto& [name, section] : sections_) {
      if (!name.empty()) out += "[" + name + "]\n";
      for (const auto& [k, v] : section) out += k + " = " + v + "\n";
      out += "\n";
    }
    return out;
  }

  std::optional<std::string> get(const std::string& section,
                                 const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    sections_[section][key] = value;
  }

  const std::map<std::string, Section>& sections() const { return sections_; }
  bool operator==(const Ini& o) const { return sections_ == o.sections_; }

 private:
  std::map<std::string, Section> sections_;
};

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct GenerationCondition {
  // empty = unconditional
  std::vector<std::pair<std::string, double>> targets;

  std::string label() const {
    if (targets.empty()) return "unconditional";
    std::string out;
    for (const auto& [name, value] : targets) {
      if (!out.empty()) out += "__";
      out += name + "_" + csv::fmt_double(value);
    }
    return out;
  }

  std::string spec_text() const {
    if (targets.empty()) return "unconditional";
    std::string out;
    for (const auto& [name, value] : targets) {
      if (!out.empty()) out += ",";
      out += name + "=" + csv::fmt_double(value);
    }
    return out;
  }

  static GenerationCondition parse(const std::string& text) {
    GenerationCondition c;
    const std::string t = csv::trim(text);
    if (t == "unconditional" || t == "none") return c;
    for (const auto& part : csv::split_line(t)) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("bad generation condition '" + text +
                          "' (expected prop=value or 'unconditional')");
      }
      char* end = nullptr;
      const std::string vs = csv::trim(part.substr(eq + 1));
      const double v = std::strtod(vs.c_str(), &end);
      if (end == vs.c_str() || *end != '\0') {
        throw ConfigError("bad target value in condition '" + text + "'");
      }
      c.targets.emplace_back(csv::trim(part.substr(0, eq)), v);
    }
    return c;
  }
};

struct RunConfig {
  // [run]
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  // [data]
  std::string dataset;
  std::vector<std::string> properties;  // empty = every column in the file
  int max_len = 120;
  std::vector<double> split_fractions = {0.8, 0.1, 0.1};
  double labeled_fraction = 1.0;
  std::string logp_table;  // optional CSV path; empty = builtin table
  // [model]
  std::string preset = "desk";
  int hidden = 32;
  int layers = 1;
  int z_dim = 8;
  // [train]
  double beta = 1e4;
  double lr = 1e-3;
  int batch_size = 32;
  int max_epochs = 300;
  int early_stop_window = 10;
  double early_stop_improvement = 0.01;
  int threads = 2;
  std::string mode = "ssvae";  // ssvae | predictor_only
  std::string resume;          // checkpoint path to continue from
  // [generate]
  std::vector<GenerationCondition> conditions = {GenerationCondition{}};
  int count_goal = 300;
  int trial_cap = 1000;
  int beam_width = 5;

  void apply_preset(const std::string& name) {
    preset = name;
    if (name == "desk") {
      hidden = 32;
      layers = 1;
      z_dim = 8;
      batch_size = 32;
      count_goal = 300;
      trial_cap = 1000;
    } else if (name == "paper") {
      hidden = 250;
      layers = 3;
      z_dim = 100;
      batch_size = 200;
      count_goal = 3000;
      trial_cap = 10000;
    } else {
      throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
    }
  }

  static RunConfig from_ini(const Ini& ini) {
    RunConfig cfg;
    if (auto p = ini.get("model", "preset")) cfg.apply_preset(*p);

    auto str = [&](const char* s, const char* k, std::string& into) {
      if (auto v = ini.get(s, k)) into = *v;
    };
    auto num = [&](const char* s, const char* k, auto& into) {
      if (auto v = ini.get(s, k)) {
        char* end = nullptr;
        const double d = std::strtod(v->c_str(), &end);
        if (end == v->c_str() || *end != '\0') {
          throw ConfigError(std::string(s) + "." + k + ": bad number '" + *v + "'");
        }
        into = static_cast<std::decay_t<decltype(into)>>(d);
      }
    };

    num("run", "seed", cfg.seed);
    str("run", "out_dir", cfg.out_dir);
    str("data", "dataset", cfg.dataset);
    if (auto v = ini.get("data", "properties")) {
      cfg.properties.clear();
      for (const auto& p : csv::split_line(*v)) {
        const std::string name = csv::trim(p);
        if (!name.empty()) cfg.properties.push_back(name);
      }
    }
    num("data", "max_len", cfg.max_len);
    if (auto v = ini.get("data", "split")) {
      cfg.split_fractions.clear();
      for (const auto& p : csv::split_line(*v)) {
        cfg.split_fractions.push_back(std::strtod(csv::trim(p).c_str(), nullptr));
      }
    }
    num("data", "labeled_fraction", cfg.labeled_fraction);
    str("data", "logp_table", cfg.logp_table);
    num("model", "hidden", cfg.hidden);
    num("model", "layers", cfg.layers);
    num("model", "z_dim", cfg.z_dim);
    num("train", "beta", cfg.beta);
    num("train", "lr", cfg.lr);
    num("train", "batch_size", cfg.batch_size);
    num("train", "max_epochs", cfg.max_epochs);
    num("train", "early_stop_window", cfg.early_stop_window);
    num("train", "early_stop_improvement", cfg.early_stop_improvement);
    num("train", "threads", cfg.threads);
    str("train", "mode", cfg.mode);
    str("train", "resume", cfg.resume);
    if (auto v = ini.get("generate", "conditions")) {
      cfg.conditions.clear();
      std::string item;
      std::istringstream ss(*v);
      while (std::getline(ss, item, ';')) {
        if (!csv::trim(item).empty()) {
          cfg.conditions.push_back(GenerationCondition::parse(item));
        }
      }
      if (cfg.conditions.empty()) {
        throw ConfigError("generate.conditions is empty");
      }
    }
    num("generate", "count_goal", cfg.count_goal);
    num("generate", "trial_cap", cfg.trial_cap);
    num("generate", "beam_width", cfg.beam_width);
    return cfg;
  }

  Ini to_ini() const {
    Ini ini;
    ini.set("run", "seed", std::to_string(seed));
    ini.set("run", "out_dir", out_dir);
    ini.set("data", "dataset", dataset);
    if (!properties.empty()) {
      ini.set("data", "properties", csv::join(properties));
    }
    ini.set("data", "max_len", std::to_string(max_len));
    std::vector<std::string> fr;
    for (double f : split_fractions) fr.push_back(csv::fmt_double(f));
    ini.set("data", "split", csv::join(fr));
    ini.set("data", "labeled_fraction", csv::fmt_double(labeled_fraction));
    if (!logp_table.empty()) ini.set("data", "logp_table", logp_table);
    ini.set("model", "preset", preset);
    ini.set("model", "hidden", std::to_string(hidden));
    ini.set("model", "layers", std::to_string(layers));
    ini.set("model", "z_dim", std::to_string(z_dim));
    ini.set("train", "beta", csv::fmt_double(beta));
    ini.set("train", "lr", csv::fmt_double(lr));
    ini.set("train", "batch_size", std::to_string(batch_size));
    ini.set("train", "max_epochs", std::to_string(max_epochs));
    ini.set("train", "early_stop_window", std::to_string(early_stop_window));
    ini.set("train", "early_stop_improvement", csv::fmt_double(early_stop_improvement));
    ini.set("train", "threads", std::to_string(threads));
    ini.set("train", "mode", mode);
    if (!resume.empty()) ini.set("train", "resume", resume);
    std::string conds;
    for (const auto& c : conditions) {
      if (!conds.empty()) conds += "; ";
      conds += c.spec_text();
    }
    ini.set("generate", "conditions", conds);
    ini.set("generate", "count_goal", std::to_string(count_goal));
    ini.set("generate", "trial_cap", std::to_string(trial_cap));
    ini.set("generate", "beam_width", std::to_string(beam_width));
    return ini;
  }
};

}  // namespace molvae

#endif  // MOLVAE_CONFIG_HPP
