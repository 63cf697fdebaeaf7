#include "edm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edm/errors.hpp"

namespace edm {

QuadraticPair::QuadraticPair(Vector c1, Vector c2)
    : QuadraticPair(c1, c2, Vector::Ones(c1.size()), Vector::Ones(c1.size())) {}

QuadraticPair::QuadraticPair(Vector c1, Vector c2, Vector a1, Vector a2)
    : centers_{std::move(c1), std::move(c2)}, scales_{std::move(a1), std::move(a2)} {
  const Eigen::Index d = centers_[0].size();
  if (d == 0) throw InputError("quadratic pair centers must be non-empty");
  if (centers_[1].size() != d) throw InputError("quadratic pair centers differ in dimension");
  for (const Vector& a : scales_) {
    if (a.size() != d) throw InputError("quadratic pair scaling has wrong dimension");
    if (!(a.array() > 0.0).all()) throw InputError("quadratic pair scalings must be > 0");
  }
}

bool QuadraticPair::identity_scales() const {
  return (scales_[0].array() == 1.0).all() && (scales_[1].array() == 1.0).all();
}

Evaluation QuadraticPair::evaluate(const Vector& theta) const {
  if (theta.size() != dim()) {
    throw InputError("theta has dimension " + std::to_string(theta.size()) + ", expected " +
                     std::to_string(dim()));
  }
  Evaluation out;
  for (std::size_t i = 0; i < 2; ++i) {
    const Vector diff = theta - centers_[i];
    Vector grad = scales_[i].cwiseProduct(diff);
    out.losses.push_back(0.5 * diff.dot(grad));
    out.gradients.push_back(std::move(grad));
  }
  return out;
}

ScaledProblem::ScaledProblem(std::shared_ptr<const MultiObjectiveProblem> inner, double kappa,
                             std::size_t target)
    : inner_(std::move(inner)), kappa_(kappa), target_(target) {
  if (!inner_) throw InputError("scaled problem needs an inner problem");
  if (!(kappa_ >= 1.0) || !std::isfinite(kappa_)) throw InputError("kappa must be >= 1");
  if (target_ >= inner_->num_objectives()) throw InputError("scaled loss index out of range");
}

Evaluation ScaledProblem::evaluate(const Vector& theta) const {
  Evaluation out = inner_->evaluate(theta);
  out.losses[target_] *= kappa_;
  out.gradients[target_] *= kappa_;
  return out;
}

Evaluation quadratic_losses(const QuadraticPair& problem, const Vector& theta) {
  return problem.evaluate(theta);
}

Evaluation scaled_losses(const ScaledProblem& problem, const Vector& theta) {
  return problem.evaluate(theta);
}

Vector finite_diff_gradient(const std::function<double(const Vector&)>& loss, const Vector& theta,
                            double h) {
  if (!(h > 0.0)) throw InputError("finite difference step must be > 0");
  Vector grad(theta.size());
  Vector probe = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    probe(j) = theta(j) + h;
    const double up = loss(probe);
    probe(j) = theta(j) - h;
    const double down = loss(probe);
    probe(j) = theta(j);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("non-finite loss in finite differences at coordinate " +
                               std::to_string(j),
                           0);
    }
    grad(j) = (up - down) / (2.0 * h);
  }
  return grad;
}

double pareto_set_distance(const QuadraticPair& problem, const Vector& theta) {
  if (!problem.identity_scales()) {
    throw UnsupportedError("Pareto set is a segment only for identity scalings");
  }
  if (theta.size() != problem.dim()) throw InputError("theta dimension mismatch");
  const Vector& a = problem.center(0);
  const Vector seg = problem.center(1) - a;
  const double len_sq = seg.squaredNorm();
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp((theta - a).dot(seg) / len_sq, 0.0, 1.0);
  return (theta - (a + t * seg)).norm();
}

}  // namespace edm
