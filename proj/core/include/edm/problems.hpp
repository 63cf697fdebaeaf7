#pragma once

#include <cstddef>
#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "edm/minnorm.hpp"

namespace edm {

/// Losses and their gradients at one point.
struct Evaluation {
  std::vector<double> losses;
  std::vector<Vector> gradients;
};

/// A vector-valued objective that can report every loss and gradient at a
/// point. Implementations must be safe to evaluate concurrently.
class MultiObjectiveProblem {
 public:
  virtual ~MultiObjectiveProblem() = default;

  virtual std::size_t num_objectives() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual Evaluation evaluate(const Vector& theta) const = 0;
};

/// L_i(theta) = 1/2 (theta - c_i)^T diag(a_i) (theta - c_i), i = 1, 2.
class QuadraticPair final : public MultiObjectiveProblem {
 public:
  /// Identity scalings.
  QuadraticPair(Vector c1, Vector c2);
  /// Diagonal scalings; every entry must be > 0.
  QuadraticPair(Vector c1, Vector c2, Vector a1, Vector a2);

  std::size_t num_objectives() const override { return 2; }
  Eigen::Index dim() const override { return centers_[0].size(); }
  Evaluation evaluate(const Vector& theta) const override;

  const Vector& center(std::size_t i) const { return centers_.at(i); }
  const Vector& scale(std::size_t i) const { return scales_.at(i); }
  bool identity_scales() const;

 private:
  std::array<Vector, 2> centers_;
  std::array<Vector, 2> scales_;
};

/// Wraps a problem and multiplies one loss (and its gradient) by kappa.
class ScaledProblem final : public MultiObjectiveProblem {
 public:
  /// Throws InputError if kappa < 1 or target is out of range.
  ScaledProblem(std::shared_ptr<const MultiObjectiveProblem> inner, double kappa,
                std::size_t target);

  std::size_t num_objectives() const override { return inner_->num_objectives(); }
  Eigen::Index dim() const override { return inner_->dim(); }
  Evaluation evaluate(const Vector& theta) const override;

  double kappa() const noexcept { return kappa_; }
  std::size_t target() const noexcept { return target_; }

 private:
  std::shared_ptr<const MultiObjectiveProblem> inner_;
  double kappa_;
  std::size_t target_;
};

/// Losses and gradients of both quadratics. Throws InputError on a
/// dimension mismatch.
Evaluation quadratic_losses(const QuadraticPair& problem, const Vector& theta);

/// Losses of the inner problem with the target loss multiplied by kappa.
Evaluation scaled_losses(const ScaledProblem& problem, const Vector& theta);

/// Central differences (L(theta + h e_j) - L(theta - h e_j)) / 2h.
/// Throws NumericalError if any evaluation is not finite.
Vector finite_diff_gradient(const std::function<double(const Vector&)>& loss, const Vector& theta,
                            double h = 1e-5);

/// Distance from theta to the segment [c1, c2], which is the Pareto set
/// when both scalings are the identity. Throws UnsupportedError otherwise.
double pareto_set_distance(const QuadraticPair& problem, const Vector& theta);

}  // namespace edm
