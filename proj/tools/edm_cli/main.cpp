#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "edm/errors.hpp"
#include "edm_cli/experiments.hpp"

namespace {

using edm::cli::Settings;

// Flag values are kept as strings and only copied into the settings when the
// flag was actually given, so config-file values survive.
struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config;

  void add(CLI::App* app, const std::string& key, const std::string& help) {
    std::string flag = "--" + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    options[key] = app->add_option(flag, values[key], help);
  }

  Settings collect() const {
    Settings s = config.empty() ? Settings() : Settings::from_file(config);
    Settings flags;
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) flags.set(key, values.at(key));
    }
    s.overlay(flags);
    return s;
  }
};

void add_common(CLI::App* app, FlagSet& f, const char* iter_key) {
  app->add_option("--config", f.config, "JSON file with settings (flags take precedence)");
  f.add(app, "method", "edm | mgda | sgd");
  f.add(app, "lr", "learning rate");
  f.add(app, iter_key, std::string(iter_key) == "iters" ? "maximum iterations" : "training epochs");
  f.add(app, "eps", "stop when the direction norm falls below this");
  f.add(app, "fw_tol", "Frank-Wolfe step tolerance");
  f.add(app, "fw_max_iters", "Frank-Wolfe iteration budget");
  f.add(app, "seed", "first seed");
  f.add(app, "repeats", "number of seeds (seed, seed+1, ...)");
  f.add(app, "out_dir", "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equiangular-direction multi-objective optimisation"};
  app.require_subcommand(1);

  FlagSet direction_flags, solve_flags, imbalanced_flags, multitask_flags;

  auto* direction = app.add_subcommand("direction", "Compute the common descent direction for a gradient file");
  direction->add_option("--config", direction_flags.config, "JSON file with settings");
  direction_flags.add(direction, "gradients", "file with one comma-separated gradient per line");
  direction_flags.add(direction, "method", "edm | mgda");
  direction_flags.add(direction, "fw_tol", "Frank-Wolfe step tolerance");
  direction_flags.add(direction, "fw_max_iters", "Frank-Wolfe iteration budget");
  direction_flags.add(direction, "out_dir", "output directory");

  auto* solve = app.add_subcommand("solve", "Run an optimiser on an analytic two-objective problem");
  add_common(solve, solve_flags, "iters");
  solve_flags.add(solve, "problem", "problem name (quadratic_pair)");
  solve_flags.add(solve, "dim", "dimension when no start point is given");
  solve_flags.add(solve, "start", "comma-separated start point");
  solve_flags.add(solve, "weights", "comma-separated weights for sgd");
  solve_flags.add(solve, "kappa", "scale applied to the second objective");

  auto* imbalanced = app.add_subcommand("imbalanced", "Train a classifier with per-class objectives");
  add_common(imbalanced, imbalanced_flags, "epochs");
  imbalanced_flags.add(imbalanced, "csv", "CSV file with a header row");
  imbalanced_flags.add(imbalanced, "label_column", "label column name (default label)");
  imbalanced_flags.add(imbalanced, "synthetic", "n_major,n_minor,features,separation");
  imbalanced_flags.add(imbalanced, "data_seed", "seed for data generation and the split");
  imbalanced_flags.add(imbalanced, "mu", "minority-class weight for sgd");
  imbalanced_flags.add(imbalanced, "test_fraction", "held-out fraction per class");
  imbalanced_flags.add(imbalanced, "batches_per_epoch", "batches per epoch");
  imbalanced_flags.add(imbalanced, "hidden", "hidden layer width");

  auto* multitask = app.add_subcommand("multitask", "Train a two-head network with a shared trunk");
  add_common(multitask, multitask_flags, "epochs");
  multitask_flags.add(multitask, "csv", "CSV file with two label columns");
  multitask_flags.add(multitask, "label_column", "first label column (default label)");
  multitask_flags.add(multitask, "label2_column", "second label column (default label2)");
  multitask_flags.add(multitask, "synthetic", "n,features,separation");
  multitask_flags.add(multitask, "classes", "classes per task for synthetic data");
  multitask_flags.add(multitask, "data_seed", "seed for data generation and the split");
  multitask_flags.add(multitask, "kappa", "scale applied to the second task loss");
  multitask_flags.add(multitask, "weights", "comma-separated task weights for sgd");
  multitask_flags.add(multitask, "test_fraction", "held-out fraction");
  multitask_flags.add(multitask, "batch_size", "mini-batch size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? edm::cli::kOk : edm::cli::kUsage;
  }

  try {
    nlohmann::ordered_json out;
    if (direction->parsed()) {
      out = edm::cli::run_direction(direction_flags.collect());
    } else if (solve->parsed()) {
      out = edm::cli::run_solve(solve_flags.collect());
    } else if (imbalanced->parsed()) {
      out = edm::cli::run_imbalanced_experiment(imbalanced_flags.collect()).summary;
      out.erase("runs");
    } else {
      out = edm::cli::run_multitask_experiment(multitask_flags.collect()).summary;
      out.erase("runs");
    }
    std::cout << out.dump(2) << '\n';
    return edm::cli::kOk;
  } catch (const edm::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return edm::cli::kUsage;
  } catch (const edm::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return edm::cli::kUsage;
  } catch (const edm::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return edm::cli::kDataError;
  } catch (const edm::NumericalError& e) {
    std::cerr << "numerical error at iteration " << e.iteration() << ": " << e.what() << '\n';
    return edm::cli::kNumericalError;
  } catch (const edm::UnsupportedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return edm::cli::kUsage;
  }
}
