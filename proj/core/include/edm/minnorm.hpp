#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace edm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Symmetric matrix of pairwise inner products of T vectors.
///
/// The upper triangle is computed and mirrored, so entries(i, j) and
/// entries(j, i) are always bitwise equal.
class GramMatrix {
 public:
  /// Wraps an existing matrix. Throws InputError unless it is square and
  /// exactly symmetric.
  explicit GramMatrix(Matrix entries);

  const Matrix& entries() const noexcept { return entries_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Matrix entries_;
};

/// Point of the probability simplex: nonnegative entries that sum to 1.
class SimplexWeights {
 public:
  /// Validates the simplex invariant (sum within 1e-12). Throws InputError.
  explicit SimplexWeights(Vector values);

  /// Barycentre 1/T * ones.
  static SimplexWeights uniform(std::size_t dim);
  /// Basis vector e_index.
  static SimplexWeights vertex(std::size_t dim, std::size_t index);
  /// Clamps negatives to zero and divides by the sum. Throws InputError if
  /// the clamped sum is not positive.
  static SimplexWeights normalized(Vector values);

  const Vector& values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

 private:
  struct Unchecked {};
  SimplexWeights(Vector values, Unchecked) : values_(std::move(values)) {}

  Vector values_;
};

/// Frank-Wolfe stopping rule: stop once the exact line-search step is at
/// most `tolerance`, or after `max_iters` iterations.
///
/// Plain Frank-Wolfe converges slowly when the minimum lies on a face of
/// the simplex: weight on vertices outside the face only decays
/// geometrically and never reaches zero. When `away_step_fallback` is set
/// and the plain iteration exhausts `max_iters`, the solver continues from
/// that iterate with away-step Frank-Wolfe until the Frank-Wolfe and away
/// gaps are both at most `tolerance`, or `fallback_max_iters` more
/// iterations have run.
struct FwConfig {
  double tolerance = 1e-10;
  std::size_t max_iters = 500;
  bool away_step_fallback = true;
  std::size_t fallback_max_iters = 20000;

  /// Throws InputError naming the offending field.
  void validate() const;
};

/// Solver output plus convergence diagnostics.
struct FwReport {
  SimplexWeights weights;
  std::size_t iterations = 0;       ///< plain Frank-Wolfe weight updates
  std::size_t away_iterations = 0;  ///< updates made by the away-step fallback
  double last_step = 0.0;           ///< last eta* of the plain iteration, 0 when T == 1
  bool converged = false;           ///< a stopping tolerance was met
};

/// M_ij = <v_i, v_j>. Throws InputError on an empty list, zero-dimensional
/// vectors or mismatched dimensions.
GramMatrix gram_matrix(std::span<const Vector> vectors);

/// w^T M w, clamped at zero.
double combination_norm_sq(const GramMatrix& gram, const SimplexWeights& weights);

/// Exact minimiser over eta in [0, 1] of the quadratic form along the
/// segment from `weights` towards vertex `target`.
double fw_line_search(const GramMatrix& gram, const SimplexWeights& weights, std::size_t target);

/// Minimum-norm point of the convex hull whose Gram matrix is `gram`,
/// returned as simplex weights.
SimplexWeights frank_wolfe_min_norm(const GramMatrix& gram, const FwConfig& config = {});

/// Same iteration as frank_wolfe_min_norm, also reporting whether the
/// tolerance was met and the last step taken.
FwReport frank_wolfe_min_norm_report(const GramMatrix& gram, const FwConfig& config = {});

}  // namespace edm
