#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "edm/minnorm.hpp"

namespace edm {

/// Gradients at or below this Euclidean norm count as zero.
inline constexpr double kZeroGradientThreshold = 1e-12;
/// Weights above this value form the support set of a direction.
inline constexpr double kSupportThreshold = 1e-9;

/// The T objective gradients at one point, with their norms and unit
/// vectors cached.
class GradientSet {
 public:
  /// Throws InputError if empty or the dimensions disagree.
  explicit GradientSet(std::vector<Vector> gradients);

  std::size_t size() const noexcept { return gradients_.size(); }
  Eigen::Index dim() const noexcept { return gradients_.front().size(); }

  const std::vector<Vector>& gradients() const noexcept { return gradients_; }
  const std::vector<double>& norms() const noexcept { return norms_; }
  /// normalized()[i] is g_i / |g_i| for active i and the zero vector otherwise.
  const std::vector<Vector>& normalized() const noexcept { return normalized_; }
  /// Indices whose norm exceeds kZeroGradientThreshold, ascending.
  const std::vector<std::size_t>& active() const noexcept { return active_; }

 private:
  std::vector<Vector> gradients_;
  std::vector<double> norms_;
  std::vector<Vector> normalized_;
  std::vector<std::size_t> active_;
};

struct DirectionResult {
  SimplexWeights weights;           ///< beta* (EDM) or alpha* (MGDA), length T
  Vector raw_direction;             ///< d_b or d_h
  std::optional<double> gamma;      ///< EDM scale factor; empty for MGDA
  Vector normalized_direction;      ///< gamma * d_b, or d_h
  double direction_norm = 0.0;      ///< |raw_direction|
  std::vector<std::size_t> support; ///< indices with weight > kSupportThreshold
  FwReport solver;                  ///< diagnostics from the simplex solve

  /// True when the step would be the zero vector.
  bool stationary() const noexcept { return direction_norm == 0.0; }
};

/// Equiangular direction: min-norm convex combination of the unit
/// gradients, with gamma = (sum_i beta_i / |g_i|)^-1. Zero-norm gradients
/// get weight 0; if every gradient is zero the result is stationary.
DirectionResult edm_direction(const GradientSet& grads, const FwConfig& config = {});

/// MGDA direction: min-norm convex combination of the raw gradients.
DirectionResult mgda_direction(const GradientSet& grads, const FwConfig& config = {});

/// Closed form for two gradients,
/// (g1/|g1| + g2/|g2|) / (1/|g1| + 1/|g2|).
Vector bisector_two(const Vector& g1, const Vector& g2);

/// gamma = (sum over weights > 0 of weights_i / norms_i)^-1.
double normalization_factor(const SimplexWeights& weights, std::span<const double> norms);

struct StationarityReport {
  double residual = 0.0;   ///< |sum_i alpha_i g_i|
  SimplexWeights weights;  ///< alpha recovered as gamma beta_i / |g_i|
};

/// Pareto-stationarity certificate built from the EDM solution.
StationarityReport stationarity_residual(const GradientSet& grads, const FwConfig& config = {});

}  // namespace edm
