//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: vocab / train / predict / generate / report.
// Exit codes: 0 success, 2 configuration or input validation error,
// 1 runtime failure.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "molvae/checkpoint.hpp"
#include "molvae/config.hpp"
#include "molvae/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // section.key=value
  std::string data_path;
  std::string checkpoint_path;
  std::string out_dir;
  long long seed = -1;
  bool seed_set = false;
};

molvae::RunConfig build_config(const CliOptions& opt) {
  molvae::Ini ini;
  if (!opt.config_path.empty()) ini = molvae::Ini::load(opt.config_path);
  for (const auto& ov : opt.overrides) {
    const auto eq = ov.find('=');
    const auto dot = ov.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw molvae::ConfigError("bad --set '" + ov + "' (expected section.key=value)");
    }
    ini.set(ov.substr(0, dot), ov.substr(dot + 1, eq - dot - 1), ov.substr(eq + 1));
  }
  molvae::RunConfig cfg = molvae::RunConfig::from_ini(ini);
  if (!opt.data_path.empty()) cfg.dataset = opt.data_path;
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (opt.seed_set) cfg.seed = static_cast<std::uint64_t>(opt.seed);
  return cfg;
}

std::string default_checkpoint(const molvae::RunConfig& cfg, const CliOptions& opt) {
  if (!opt.checkpoint_path.empty()) return opt.checkpoint_path;
  return (std::filesystem::path(cfg.out_dir) / "checkpoint.bin").string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised VAE for conditional molecular design"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CliOptions opt;
  app.add_option("--config", opt.config_path, "INI configuration file");
  app.add_option("--set", opt.overrides, "Override a config key (section.key=value)")
      ->take_all();
  app.add_option("--out", opt.out_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", opt.seed, "Master seed");

  auto* cmd_vocab = app.add_subcommand("vocab", "Build the symbol vocabulary");
  cmd_vocab->add_option("--data", opt.data_path, "Dataset CSV");
  auto* cmd_train = app.add_subcommand("train", "Train the model");
  cmd_train->add_option("--data", opt.data_path, "Dataset CSV");
  auto* cmd_predict = app.add_subcommand("predict", "Predict properties");
  cmd_predict->add_option("--checkpoint", opt.checkpoint_path, "Checkpoint file");
  cmd_predict->add_option("--data", opt.data_path, "Dataset CSV to predict on");
  auto* cmd_generate = app.add_subcommand("generate", "Generate molecules");
  cmd_generate->add_option("--checkpoint", opt.checkpoint_path, "Checkpoint file");
  auto* cmd_report = app.add_subcommand("report", "Summarize a run directory");

  CLI11_PARSE(app, argc, argv);
  opt.seed_set = seed_opt->count() > 0;

  try {
    const molvae::RunConfig cfg = build_config(opt);
    if (cmd_vocab->parsed()) {
      const auto path = molvae::pipeline::run_vocab(cfg);
      std::cout << "vocabulary written to " << path << "\n";
    } else if (cmd_train->parsed()) {
      const auto out = molvae::pipeline::run_train(cfg);
      if (out.skipped_too_long > 0) {
        std::cerr << "warning: skipped " << out.skipped_too_long
                  << " over-length molecules\n";
      }
      if (out.skipped_oov > 0) {
        std::cerr << "warning: skipped " << out.skipped_oov
                  << " validation/test molecules with out-of-vocabulary symbols\n";
      }
      std::cout << "trained " << out.history.stopped_epoch << " epoch(s), stop: "
                << out.history.stop_reason << ", best validation "
                << out.history.best_val << " at epoch " << out.history.best_epoch
                << "\ncheckpoint written to " << out.checkpoint_path << "\n";
    } else if (cmd_predict->parsed()) {
      if (opt.data_path.empty() && cfg.dataset.empty()) {
        throw molvae::ConfigError("predict needs --data or data.dataset");
      }
      const std::string data = opt.data_path.empty() ? cfg.dataset : opt.data_path;
      const auto out =
          molvae::pipeline::run_predict(cfg, default_checkpoint(cfg, opt), data);
      if (out.skipped_oov > 0) {
        std::cerr << "warning: " << out.skipped_oov
                  << " molecules contain out-of-vocabulary symbols\n";
      }
      std::cout << "predicted " << out.predicted << " molecule(s)\n";
      if (!out.mae.empty()) {
        const molvae::SsvaeModel model =
            molvae::load_checkpoint(default_checkpoint(cfg, opt));
        for (std::size_t i = 0; i < out.mae.size(); ++i) {
          std::cout << "MAE " << model.stats.names[i] << ": " << out.mae[i]
                    << " (n=" << out.labeled << ")\n";
        }
      }
    } else if (cmd_generate->parsed()) {
      const auto out =
          molvae::pipeline::run_generate(cfg, default_checkpoint(cfg, opt));
      for (const auto& [cond, report] : out.reports) {
        std::cout << cond.spec_text() << ": generated " << report.generated
                  << ", invalid " << report.invalid << ", in training set "
                  << report.in_training_set << ", duplicated " << report.duplicated
                  << ", new unique " << report.new_unique << "\n";
      }
    } else if (cmd_report->parsed()) {
      const auto path = molvae::pipeline::run_report(cfg);
      std::cout << "summary written to " << path << "\n";
    }
    return 0;
  } catch (const molvae::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const molvae::CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const molvae::CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const molvae::smiles::SmilesError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 1;
  }
}
