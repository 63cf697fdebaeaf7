#include "edm/direction.hpp"

#include <cmath>
#include <string>

#include "edm/errors.hpp"

namespace edm {
namespace {

std::vector<std::size_t> support_of(const SimplexWeights& w) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w.dim(); ++i) {
    if (w[i] > kSupportThreshold) out.push_back(i);
  }
  return out;
}

Vector combine(const SimplexWeights& w, const std::vector<Vector>& vectors) {
  Vector out = Vector::Zero(vectors.front().size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (w[i] != 0.0) out += w[i] * vectors[i];
  }
  return out;
}

}  // namespace

GradientSet::GradientSet(std::vector<Vector> gradients) : gradients_(std::move(gradients)) {
  if (gradients_.empty()) throw InputError("gradient set must contain at least one gradient");
  const Eigen::Index d = gradients_.front().size();
  if (d == 0) throw InputError("gradients must have dimension >= 1");
  norms_.reserve(gradients_.size());
  normalized_.reserve(gradients_.size());
  for (std::size_t i = 0; i < gradients_.size(); ++i) {
    const Vector& g = gradients_[i];
    if (g.size() != d) {
      throw InputError("gradient " + std::to_string(i) + " has dimension " +
                       std::to_string(g.size()) + ", expected " + std::to_string(d));
    }
    const double n = g.norm();
    norms_.push_back(n);
    if (n > kZeroGradientThreshold) {
      normalized_.push_back(g / n);
      active_.push_back(i);
    } else {
      normalized_.push_back(Vector::Zero(d));
    }
  }
}

DirectionResult edm_direction(const GradientSet& grads, const FwConfig& config) {
  config.validate();
  const std::size_t t = grads.size();
  const auto& active = grads.active();

  if (active.empty()) {
    Vector zero = Vector::Zero(grads.dim());
    auto uniform = SimplexWeights::uniform(t);
    return DirectionResult{uniform, zero, std::nullopt, zero, 0.0, {},
                           FwReport{uniform, 0, 0, 0.0, true}};
  }

  std::vector<Vector> units;
  units.reserve(active.size());
  for (std::size_t i : active) units.push_back(grads.normalized()[i]);

  FwReport report = frank_wolfe_min_norm_report(gram_matrix(units), config);

  Vector full = Vector::Zero(static_cast<Eigen::Index>(t));
  for (std::size_t k = 0; k < active.size(); ++k) {
    full(static_cast<Eigen::Index>(active[k])) = report.weights[k];
  }
  SimplexWeights beta(std::move(full));

  Vector d_b = combine(beta, grads.normalized());
  const double gamma = normalization_factor(beta, grads.norms());
  const double norm = d_b.norm();
  Vector scaled = gamma * d_b;
  auto support = support_of(beta);
  return DirectionResult{std::move(beta), std::move(d_b), gamma, std::move(scaled), norm,
                         std::move(support), std::move(report)};
}

DirectionResult mgda_direction(const GradientSet& grads, const FwConfig& config) {
  config.validate();
  FwReport report = frank_wolfe_min_norm_report(gram_matrix(grads.gradients()), config);
  Vector d_h = combine(report.weights, grads.gradients());
  const double norm = d_h.norm();
  auto support = support_of(report.weights);
  SimplexWeights alpha = report.weights;
  Vector copy = d_h;
  return DirectionResult{std::move(alpha), std::move(d_h), std::nullopt, std::move(copy), norm,
                         std::move(support), std::move(report)};
}

Vector bisector_two(const Vector& g1, const Vector& g2) {
  if (g1.size() != g2.size()) throw InputError("bisector_two: dimension mismatch");
  const double n1 = g1.norm();
  const double n2 = g2.norm();
  if (!(n1 > kZeroGradientThreshold) || !(n2 > kZeroGradientThreshold)) {
    throw InputError("bisector_two: gradients must be non-zero");
  }
  return (g1 / n1 + g2 / n2) / (1.0 / n1 + 1.0 / n2);
}

double normalization_factor(const SimplexWeights& weights, std::span<const double> norms) {
  if (norms.size() != weights.dim()) {
    throw InputError("normalization_factor: weights and norms differ in length");
  }
  double inverse = 0.0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (weights[i] > 0.0) {
      if (!(norms[i] > 0.0)) {
        throw InputError("normalization_factor: positive weight on zero-norm gradient " +
                         std::to_string(i));
      }
      inverse += weights[i] / norms[i];
    }
  }
  return 1.0 / inverse;
}

StationarityReport stationarity_residual(const GradientSet& grads, const FwConfig& config) {
  DirectionResult dir = edm_direction(grads, config);
  const std::size_t t = grads.size();
  if (!dir.gamma) {
    // Every gradient is zero: any convex combination certifies stationarity.
    return StationarityReport{0.0, SimplexWeights::uniform(t)};
  }
  Vector alpha = Vector::Zero(static_cast<Eigen::Index>(t));
  for (std::size_t i : grads.active()) {
    alpha(static_cast<Eigen::Index>(i)) = *dir.gamma * dir.weights[i] / grads.norms()[i];
  }
  SimplexWeights recovered = SimplexWeights::normalized(std::move(alpha));
  const double residual = combine(recovered, grads.gradients()).norm();
  return StationarityReport{residual, std::move(recovered)};
}

}  // namespace edm
