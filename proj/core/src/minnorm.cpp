#include "edm/minnorm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edm/errors.hpp"

namespace edm {
namespace {

constexpr double kSimplexSumTolerance = 1e-12;
constexpr double kLineSearchDenominatorFloor = 1e-18;

Eigen::Index to_index(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require_same_dim(const GramMatrix& gram, const SimplexWeights& weights) {
  if (gram.dim() != weights.dim()) {
    throw InputError("weights have dimension " + std::to_string(weights.dim()) +
                     " but the Gram matrix has dimension " + std::to_string(gram.dim()));
  }
}

// Three-case closed form given the scalars it depends on:
//   quad   = w^T M w
//   cross  = w^T M e_i  (= (Mw)_i)
//   vertex = e_i^T M e_i
double line_search_step(double quad, double cross, double vertex) {
  if (quad <= cross) return 0.0;
  if (vertex <= cross) return 1.0;
  const double denominator = quad - 2.0 * cross + vertex;
  if (denominator < kLineSearchDenominatorFloor) return 0.0;
  return std::clamp((quad - cross) / denominator, 0.0, 1.0);
}

std::size_t argmin_first(const Vector& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) < v(to_index(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

// Away-step Frank-Wolfe with exact line search, started from `beta`.
// Returns the number of updates and whether both gaps met the tolerance.
std::pair<std::size_t, bool> away_step_phase(const Matrix& m, Vector& beta, double tolerance,
                                             std::size_t max_iters) {
  for (std::size_t k = 0; k < max_iters; ++k) {
    const Vector mb = m * beta;
    const double quad = beta.dot(mb);
    const std::size_t toward = argmin_first(mb);
    Eigen::Index away = -1;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      if (beta(i) > 0.0 && (away < 0 || mb(i) > mb(away))) away = i;
    }
    const double fw_gap = quad - mb(to_index(toward));
    const double away_gap = mb(away) - quad;
    if (fw_gap <= tolerance && away_gap <= tolerance) return {k, true};

    if (fw_gap >= away_gap) {
      const double eta = line_search_step(quad, mb(to_index(toward)), m(to_index(toward), to_index(toward)));
      if (eta <= 0.0) return {k, false};
      beta *= (1.0 - eta);
      beta(to_index(toward)) += eta;
    } else {
      // Move weight off `away`: beta + eta (beta - e_away), eta in [0, b/(1-b)].
      const double b = beta(away);
      const double max_eta = b < 1.0 ? b / (1.0 - b) : 0.0;
      const double curvature = quad - 2.0 * mb(away) + m(away, away);
      double eta = max_eta;
      if (curvature >= kLineSearchDenominatorFloor) eta = std::min(max_eta, away_gap / curvature);
      if (!(eta > 0.0)) return {k, false};
      beta *= (1.0 + eta);
      beta(away) -= eta;
      if (eta == max_eta) beta(away) = 0.0;  // drop step
      beta = beta.cwiseMax(0.0);
    }
  }
  return {max_iters, false};
}

}  // namespace

GramMatrix::GramMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw InputError("Gram matrix must be square");
  }
  if (entries_.rows() == 0) {
    throw InputError("Gram matrix must be at least 1x1");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (entries_(i, j) != entries_(j, i)) {
        throw InputError("Gram matrix is not symmetric at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
      }
    }
  }
}

SimplexWeights::SimplexWeights(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw InputError("simplex weights must be non-empty");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!(values_(i) >= 0.0)) {
      throw InputError("simplex weight " + std::to_string(i) + " is negative or NaN");
    }
  }
  if (std::abs(values_.sum() - 1.0) > kSimplexSumTolerance) {
    throw InputError("simplex weights must sum to 1");
  }
}

SimplexWeights SimplexWeights::uniform(std::size_t dim) {
  if (dim == 0) throw InputError("simplex dimension must be positive");
  return SimplexWeights(Vector::Constant(to_index(dim), 1.0 / static_cast<double>(dim)),
                        Unchecked{});
}

SimplexWeights SimplexWeights::vertex(std::size_t dim, std::size_t index) {
  if (index >= dim) throw InputError("vertex index out of range");
  Vector v = Vector::Zero(to_index(dim));
  v(to_index(index)) = 1.0;
  return SimplexWeights(std::move(v), Unchecked{});
}

SimplexWeights SimplexWeights::normalized(Vector values) {
  if (values.size() == 0) throw InputError("simplex weights must be non-empty");
  values = values.cwiseMax(0.0);
  const double sum = values.sum();
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw InputError("cannot normalise weights with non-positive sum");
  }
  values /= sum;
  return SimplexWeights(std::move(values), Unchecked{});
}

void FwConfig::validate() const {
  if (!(tolerance > 0.0)) throw InputError("fw tolerance must be > 0");
  if (max_iters < 1) throw InputError("fw max_iters must be >= 1");
  if (away_step_fallback && fallback_max_iters < 1) {
    throw InputError("fw fallback_max_iters must be >= 1");
  }
}

GramMatrix gram_matrix(std::span<const Vector> vectors) {
  if (vectors.empty()) throw InputError("gram_matrix needs at least one vector");
  const Eigen::Index d = vectors.front().size();
  if (d == 0) throw InputError("vectors must have dimension >= 1");
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    if (vectors[i].size() != d) {
      throw InputError("vector " + std::to_string(i) + " has dimension " +
                       std::to_string(vectors[i].size()) + ", expected " + std::to_string(d));
    }
  }
  const auto t = to_index(vectors.size());
  Matrix m(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = i; j < t; ++j) {
      m(i, j) = vectors[static_cast<std::size_t>(i)].dot(vectors[static_cast<std::size_t>(j)]);
      m(j, i) = m(i, j);
    }
  }
  return GramMatrix(std::move(m));
}

double combination_norm_sq(const GramMatrix& gram, const SimplexWeights& weights) {
  require_same_dim(gram, weights);
  const Vector& w = weights.values();
  return std::max(0.0, w.dot(gram.entries() * w));
}

double fw_line_search(const GramMatrix& gram, const SimplexWeights& weights, std::size_t target) {
  require_same_dim(gram, weights);
  if (target >= gram.dim()) throw InputError("line-search target index out of range");
  const Vector& w = weights.values();
  const Vector mw = gram.entries() * w;
  return line_search_step(w.dot(mw), mw(to_index(target)), gram(target, target));
}

FwReport frank_wolfe_min_norm_report(const GramMatrix& gram, const FwConfig& config) {
  config.validate();
  const std::size_t t = gram.dim();
  if (t == 1) return FwReport{SimplexWeights::vertex(1, 0), 0, 0, 0.0, true};

  const Matrix& m = gram.entries();
  Vector beta = SimplexWeights::uniform(t).values();
  FwReport report{SimplexWeights::uniform(t), 0, 0, 0.0, false};

  for (std::size_t k = 0; k < config.max_iters; ++k) {
    const Vector mb = m * beta;
    const std::size_t target = argmin_first(mb);
    const double eta = line_search_step(beta.dot(mb), mb(to_index(target)), gram(target, target));
    report.last_step = eta;
    if (eta <= config.tolerance) {
      report.converged = true;
      break;
    }
    beta *= (1.0 - eta);
    beta(to_index(target)) += eta;
    report.iterations = k + 1;
  }

  if (!report.converged && config.away_step_fallback) {
    auto [updates, met] = away_step_phase(m, beta, config.tolerance, config.fallback_max_iters);
    report.away_iterations = updates;
    report.converged = met;
  }

  report.weights = SimplexWeights::normalized(std::move(beta));
  return report;
}

SimplexWeights frank_wolfe_min_norm(const GramMatrix& gram, const FwConfig& config) {
  return frank_wolfe_min_norm_report(gram, config).weights;
}

}  // namespace edm
