#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "edm/optimize.hpp"
#include "edm_cli/settings.hpp"

namespace edm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

/// One gradient per non-blank line, comma-separated decimals. Throws
/// DataError naming the 1-based line on malformed input.
std::vector<Vector> read_gradient_file(const std::filesystem::path& path);

/// iter, loss_0.., dir_norm, gamma, beta_0.., step_norm
void write_trace_csv(const std::filesystem::path& path, std::span<const IterationTrace> trace);

/// Direction report for a gradient file; also written to out_dir/direction.json.
nlohmann::ordered_json run_direction(const Settings& settings);

/// Analytic benchmark runs. Writes trace_seed<S>.csv and summary_seed<S>.json
/// per seed plus an aggregate summary.json; returns the aggregate.
nlohmann::ordered_json run_solve(const Settings& settings);

struct ImbalancedOutcome {
  std::vector<std::vector<double>> accuracy;  ///< [seed][class] test accuracy (NaN if class absent)
  nlohmann::ordered_json summary;
};

/// Per-class batching on an imbalanced dataset, evaluated on a stratified
/// test split over `repeats` initialisations.
ImbalancedOutcome run_imbalanced_experiment(const Settings& settings);

struct MultitaskOutcome {
  std::vector<std::vector<double>> accuracy;  ///< [seed][task] test accuracy
  std::vector<Vector> first_shared_steps;     ///< unit trunk step of each seed's first batch
  nlohmann::ordered_json summary;
};

/// Two-task training with the trunk updated by the chosen rule and kappa
/// applied to the task-2 loss.
MultitaskOutcome run_multitask_experiment(const Settings& settings);

}  // namespace edm::cli
