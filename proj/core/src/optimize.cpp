#include "edm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "edm/errors.hpp"

namespace edm {
namespace {

void require_finite(const Evaluation& eval, std::size_t iteration) {
  for (double l : eval.losses) {
    if (!std::isfinite(l)) throw NumericalError("non-finite loss", iteration);
  }
  for (const Vector& g : eval.gradients) {
    if (!g.allFinite()) throw NumericalError("non-finite gradient", iteration);
  }
}

Evaluation evaluate_checked(const MultiObjectiveProblem& problem, const Vector& theta,
                            std::size_t iteration) {
  Evaluation eval = problem.evaluate(theta);
  if (eval.losses.size() != problem.num_objectives() ||
      eval.gradients.size() != problem.num_objectives()) {
    throw InputError("problem returned the wrong number of losses or gradients");
  }
  require_finite(eval, iteration);
  return eval;
}

RunResult run_loop(Method method, const MultiObjectiveProblem& problem, const Vector& theta0,
                   const OptimizerConfig& config) {
  config.validate();
  if (problem.num_objectives() < 1) throw InputError("problem has no objectives");
  if (theta0.size() != problem.dim()) throw InputError("theta0 dimension does not match problem");
  if (method == Method::weighted_sum &&
      (!config.weights || config.weights->size() != problem.num_objectives())) {
    throw InputError("weighted_sum needs one weight per loss");
  }

  RunResult result;
  Vector theta = theta0;
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    Evaluation eval = evaluate_checked(problem, theta, k);
    const GradientSet grads(std::move(eval.gradients));
    StepDirection step = step_direction(method, grads, config.weights, config.fw);
    if (!step.direction.allFinite()) throw NumericalError("non-finite direction", k);

    IterationTrace record{k, std::move(eval.losses), step.norm, step.gamma, step.weights, 0.0};
    if (step.norm <= config.stop_tolerance) {
      result.trace.push_back(std::move(record));
      result.converged = true;
      break;
    }
    const Vector delta = config.learning_rate * step.direction;
    theta -= delta;
    record.step_norm = delta.norm();
    result.trace.push_back(std::move(record));
    result.iterations_used = k + 1;
  }

  Evaluation last = evaluate_checked(problem, theta, result.iterations_used);
  result.stationarity = stationarity_residual(GradientSet(std::move(last.gradients)), config.fw).residual;
  result.final_point = std::move(theta);
  return result;
}

void check_finite_step(const StepDirection& step, std::size_t epoch) {
  if (!step.direction.allFinite()) throw NumericalError("non-finite direction", epoch);
}

// Accumulates per-batch quantities into one per-epoch trace record.
class EpochAccumulator {
 public:
  explicit EpochAccumulator(std::size_t losses) : loss_sum_(losses, 0.0) {}

  void add(std::span<const double> losses, const StepDirection& step) {
    for (std::size_t i = 0; i < losses.size(); ++i) loss_sum_[i] += losses[i];
    norm_sum_ += step.norm;
    if (step.gamma) {
      gamma_sum_ += *step.gamma;
      ++gamma_count_;
    }
    weight_sum_ = weight_sum_.size() == 0 ? step.weights.values() : Vector(weight_sum_ + step.weights.values());
    ++count_;
  }

  IterationTrace finish(std::size_t epoch, double step_norm) const {
    IterationTrace t;
    t.iteration = epoch;
    const double n = static_cast<double>(std::max<std::size_t>(count_, 1));
    for (double s : loss_sum_) t.losses.push_back(s / n);
    t.direction_norm = norm_sum_ / n;
    if (gamma_count_ > 0) t.gamma = gamma_sum_ / static_cast<double>(gamma_count_);
    t.weights = weight_sum_.size() == 0 ? SimplexWeights::uniform(loss_sum_.size())
                                        : SimplexWeights::normalized(weight_sum_);
    t.step_norm = step_norm;
    return t;
  }

 private:
  std::vector<double> loss_sum_;
  double norm_sum_ = 0.0;
  double gamma_sum_ = 0.0;
  std::size_t gamma_count_ = 0;
  Vector weight_sum_;
  std::size_t count_ = 0;
};

LabeledBatch concatenate(const std::vector<LabeledBatch>& parts) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.features.rows();
  LabeledBatch out;
  out.features.resize(rows, parts.front().features.cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.features.middleRows(at, p.features.rows()) = p.features;
    at += p.features.rows();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::edm: return "edm";
    case Method::mgda: return "mgda";
    case Method::weighted_sum: return "weighted_sum";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "edm") return Method::edm;
  if (name == "mgda") return Method::mgda;
  if (name == "weighted_sum" || name == "sgd") return Method::weighted_sum;
  throw InputError("unknown method '" + std::string(name) + "' (expected edm, mgda or sgd)");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InputError("learning_rate must be > 0");
  }
  if (max_iters < 1) throw InputError("max_iters must be >= 1");
  if (!(stop_tolerance > 0.0)) throw InputError("stop_tolerance must be > 0");
  if (weights) {
    for (double w : *weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw InputError("weights must all be > 0");
    }
  }
  fw.validate();
}

StepDirection step_direction(Method method, const GradientSet& grads,
                             const std::optional<std::vector<double>>& weights,
                             const FwConfig& fw) {
  switch (method) {
    case Method::edm: {
      DirectionResult d = edm_direction(grads, fw);
      const double norm = d.normalized_direction.norm();
      return StepDirection{std::move(d.normalized_direction), norm, d.gamma, std::move(d.weights)};
    }
    case Method::mgda: {
      DirectionResult d = mgda_direction(grads, fw);
      return StepDirection{std::move(d.normalized_direction), d.direction_norm, std::nullopt,
                           std::move(d.weights)};
    }
    case Method::weighted_sum: {
      if (!weights || weights->size() != grads.size()) {
        throw InputError("weighted_sum needs one weight per loss");
      }
      Vector total = Vector::Zero(grads.dim());
      Vector w(static_cast<Eigen::Index>(weights->size()));
      for (std::size_t i = 0; i < grads.size(); ++i) {
        total += (*weights)[i] * grads.gradients()[i];
        w(static_cast<Eigen::Index>(i)) = (*weights)[i];
      }
      const double norm = total.norm();
      return StepDirection{std::move(total), norm, std::nullopt,
                           SimplexWeights::normalized(std::move(w))};
    }
  }
  throw InputError("unknown method");
}

RunResult run_edm(const MultiObjectiveProblem& problem, const Vector& theta0,
                  const OptimizerConfig& config) {
  return run_loop(Method::edm, problem, theta0, config);
}

RunResult run_mgda(const MultiObjectiveProblem& problem, const Vector& theta0,
                   const OptimizerConfig& config) {
  return run_loop(Method::mgda, problem, theta0, config);
}

RunResult run_weighted_sum(const MultiObjectiveProblem& problem, const Vector& theta0,
                           const OptimizerConfig& config) {
  return run_loop(Method::weighted_sum, problem, theta0, config);
}

RunResult run(const MultiObjectiveProblem& problem, const Vector& theta0,
              const OptimizerConfig& config) {
  return run_loop(config.method, problem, theta0, config);
}

MultitaskResult run_multitask(TwoHeadMlp model, const Dataset& data, const MultitaskConfig& config) {
  config.optimizer.validate();
  if (!data.two_task()) throw InputError("multitask training needs a two-task dataset");
  if (config.batch_size < 1) throw InputError("batch_size must be >= 1");
  if (!(config.kappa >= 1.0) || !std::isfinite(config.kappa)) throw InputError("kappa must be >= 1");

  const OptimizerConfig& opt = config.optimizer;
  std::optional<std::vector<double>> weights = opt.weights;
  if (opt.method == Method::weighted_sum && !weights) weights = std::vector<double>{1.0, 1.0};
  const double scales[2] = {1.0, config.kappa};
  const std::span<const double, 2> task_scales(scales);
  const double s = opt.learning_rate;

  MultitaskResult result{std::move(model), {}, Vector()};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::seed_seq seq{opt.seed, static_cast<std::uint64_t>(epoch), std::uint64_t{5}};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    const Vector start = result.model.flatten();
    EpochAccumulator acc(2);
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t last = std::min(order.size(), first + config.batch_size);
      const LabeledBatch batch =
          data.gather(std::span<const std::size_t>(order.data() + first, last - first));

      TwoTaskGradients g;
      try {
        g = two_task_gradients(result.model, batch, task_scales);
      } catch (const NumericalError& e) {
        throw NumericalError(e.what(), epoch);
      }
      const GradientSet shared({g.shared[0], g.shared[1]});
      const StepDirection step = step_direction(opt.method, shared, weights, opt.fw);
      check_finite_step(step, epoch);
      if (result.first_shared_step.size() == 0 && step.norm > 0.0) {
        result.first_shared_step = step.direction / step.norm;
      }

      MlpParams& trunk = result.model.trunk();
      trunk.assign(trunk.flatten() - s * step.direction);
      for (std::size_t t = 0; t < 2; ++t) {
        MlpParams& head = result.model.head(t);
        head.assign(head.flatten() - s * g.head[t]);
      }
      acc.add(g.losses, step);
    }
    const Vector end = result.model.flatten();
    if (!end.allFinite()) throw NumericalError("non-finite parameters", epoch);
    result.run.trace.push_back(acc.finish(epoch, (end - start).norm()));
    result.run.iterations_used = epoch + 1;
  }

  result.run.final_point = result.model.flatten();
  if (data.size() > 0) {
    const TwoTaskGradients full = two_task_gradients(result.model, data.as_batch(), task_scales);
    result.run.stationarity =
        stationarity_residual(GradientSet({full.shared[0], full.shared[1]}), opt.fw).residual;
  }
  return result;
}

ImbalancedResult run_imbalanced(MlpParams model, const Dataset& train,
                                const ImbalancedConfig& config) {
  config.optimizer.validate();
  const OptimizerConfig& opt = config.optimizer;
  const std::size_t classes = train.num_classes();
  if (classes < 1) throw InputError("training set has no classes");
  if (model.output_dim() < classes) throw InputError("network has fewer outputs than classes");
  std::optional<std::vector<double>> weights = opt.weights;
  if (opt.method == Method::weighted_sum) {
    if (!weights) weights = std::vector<double>(classes, 1.0);
    if (weights->size() != classes) throw InputError("need one class weight per class");
  }
  const ClassLossSpec spec = ClassLossSpec::uniform(classes);
  const ClassBatcher batcher(train, config.batching);

  ImbalancedResult result{std::move(model), {}};
  Vector theta = result.model.flatten();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const Vector start = theta;
    EpochAccumulator acc(classes);
    for (const auto& tuple : batcher.epoch(epoch)) {
      ClassLosses losses;
      try {
        losses = per_class_losses(result.model, concatenate(tuple), spec);
      } catch (const NumericalError& e) {
        throw NumericalError(e.what(), epoch);
      }
      const GradientSet grads(std::move(losses.gradients));
      const StepDirection step = step_direction(opt.method, grads, weights, opt.fw);
      check_finite_step(step, epoch);
      theta -= opt.learning_rate * step.direction;
      result.model.assign(theta);
      acc.add(losses.losses, step);
    }
    if (!theta.allFinite()) throw NumericalError("non-finite parameters", epoch);
    result.run.trace.push_back(acc.finish(epoch, (theta - start).norm()));
    result.run.iterations_used = epoch + 1;
  }

  result.run.final_point = theta;
  const ClassLosses full = per_class_losses(result.model, train.as_batch(), spec);
  result.run.stationarity = stationarity_residual(GradientSet(full.gradients), opt.fw).residual;
  return result;
}

}  // namespace edm
