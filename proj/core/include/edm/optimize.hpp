#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edm/data.hpp"
#include "edm/direction.hpp"
#include "edm/neural.hpp"
#include "edm/problems.hpp"

namespace edm {

enum class Method { edm, mgda, weighted_sum };

std::string_view to_string(Method m) noexcept;
/// Accepts "edm", "mgda", "weighted_sum" (alias "sgd"). Throws InputError.
Method parse_method(std::string_view name);

struct OptimizerConfig {
  Method method = Method::edm;
  double learning_rate = 0.1;
  std::size_t max_iters = 1000;
  double stop_tolerance = 1e-8;
  /// Per-loss weights for the weighted-sum baseline.
  std::optional<std::vector<double>> weights;
  FwConfig fw;
  std::uint64_t seed = 0;

  /// Throws InputError naming the offending field.
  void validate() const;
};

struct IterationTrace {
  std::size_t iteration = 0;
  std::vector<double> losses;
  double direction_norm = 0.0;  ///< norm of the direction the step is taken along
  std::optional<double> gamma;
  SimplexWeights weights = SimplexWeights::uniform(1);
  double step_norm = 0.0;       ///< |theta_{k+1} - theta_k|
};

struct RunResult {
  Vector final_point;
  bool converged = false;
  std::size_t iterations_used = 0;  ///< parameter updates applied
  std::vector<IterationTrace> trace;
  double stationarity = 0.0;        ///< stationarity_residual at final_point
};

/// One step direction under a given rule.
struct StepDirection {
  Vector direction;  ///< parameters move along -learning_rate * direction
  double norm = 0.0;
  std::optional<double> gamma;
  SimplexWeights weights = SimplexWeights::uniform(1);
};

/// gamma d_b for edm, d_h for mgda, sum_i w_i g_i for weighted_sum (whose
/// reported weights are w normalised onto the simplex).
StepDirection step_direction(Method method, const GradientSet& grads,
                             const std::optional<std::vector<double>>& weights,
                             const FwConfig& fw);

/// Equiangular direction method: theta <- theta - s gamma d_b, stopping
/// before the update once |gamma d_b| <= stop_tolerance. Throws
/// NumericalError (with the iteration index) on non-finite losses or
/// gradients.
RunResult run_edm(const MultiObjectiveProblem& problem, const Vector& theta0,
                  const OptimizerConfig& config);
/// MGDA: theta <- theta - s d_h with the same stopping rule on |d_h|.
RunResult run_mgda(const MultiObjectiveProblem& problem, const Vector& theta0,
                   const OptimizerConfig& config);
/// Gradient descent on sum_i w_i L_i. Requires config.weights.
RunResult run_weighted_sum(const MultiObjectiveProblem& problem, const Vector& theta0,
                           const OptimizerConfig& config);
/// Dispatches on config.method.
RunResult run(const MultiObjectiveProblem& problem, const Vector& theta0,
              const OptimizerConfig& config);

struct MultitaskConfig {
  OptimizerConfig optimizer;
  std::size_t epochs = 25;
  std::size_t batch_size = 256;
  double kappa = 1.0;  ///< multiplier on the task-2 loss
};

struct MultitaskResult {
  TwoHeadMlp model;
  RunResult run;  ///< one trace record per epoch, losses averaged over batches
  /// Unit vector of the first shared-parameter step (empty if no step ran).
  Vector first_shared_step;
};

/// Trains the trunk with the configured multi-objective rule on the task
/// losses (task 2 scaled by kappa) and each head by plain gradient steps on
/// its own loss. All gradients of a batch are computed before any update.
MultitaskResult run_multitask(TwoHeadMlp model, const Dataset& data, const MultitaskConfig& config);

struct ImbalancedConfig {
  OptimizerConfig optimizer;
  std::size_t epochs = 30;
  BatchPlan batching;
};

struct ImbalancedResult {
  MlpParams model;
  RunResult run;  ///< one trace record per epoch, losses averaged over batches
};

/// Trains on per-class summed cross-entropy losses drawn from per-class
/// batches. weighted_sum uses optimizer.weights as class weights (mu).
ImbalancedResult run_imbalanced(MlpParams model, const Dataset& train,
                                const ImbalancedConfig& config);

}  // namespace edm
