#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "edm/direction.hpp"
#include "edm/errors.hpp"
#include "edm/problems.hpp"
#include "support/generators.hpp"

using namespace edm;
using edm::testing::Gen;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::shared_ptr<const QuadraticPair> unit_pair() {
  return std::make_shared<const QuadraticPair>(vec({-1, 0}), vec({1, 0}));
}

}  // namespace

TEST_CASE("quadratic_losses examples") {
  const auto p = unit_pair();
  const auto at_c1 = quadratic_losses(*p, vec({-1, 0}));
  CHECK(at_c1.losses[0] == 0.0);
  CHECK(at_c1.gradients[0].isZero());

  const auto e = quadratic_losses(*p, vec({0, 1}));
  CHECK(e.losses[0] == 1.0);
  CHECK(e.losses[1] == 1.0);
  CHECK(e.gradients[0] == vec({1, 1}));
  CHECK(e.gradients[1] == vec({-1, 1}));

  const auto seg = quadratic_losses(*p, vec({0, 0}));
  CHECK(seg.gradients[0] == vec({1, 0}));
  CHECK(seg.gradients[1] == vec({-1, 0}));
  CHECK(stationarity_residual(GradientSet(seg.gradients)).residual == 0.0);

  CHECK_THROWS_AS(quadratic_losses(*p, vec({0, 0, 0})), InputError);
}

TEST_CASE("QuadraticPair validation and scaled losses") {
  CHECK_THROWS_AS(QuadraticPair(vec({0, 0}), vec({0})), InputError);
  CHECK_THROWS_AS(QuadraticPair(vec({0}), vec({1}), vec({0}), vec({1})), InputError);
  const QuadraticPair scaled(vec({0, 0}), vec({1, 1}), vec({2, 3}), vec({1, 1}));
  CHECK(!scaled.identity_scales());
  const auto e = scaled.evaluate(vec({1, 1}));
  CHECK(e.losses[0] == doctest::Approx(0.5 * (2 + 3)));
  CHECK(e.gradients[0] == vec({2, 3}));
  CHECK_THROWS_AS(pareto_set_distance(scaled, vec({0, 0})), UnsupportedError);
}

TEST_CASE("ScaledProblem") {
  const auto p = unit_pair();
  const Vector theta = vec({0, 1});
  const auto base = p->evaluate(theta);

  const ScaledProblem one(p, 1.0, 1);
  const auto e1 = scaled_losses(one, theta);
  CHECK(e1.losses == base.losses);
  CHECK(e1.gradients[1] == base.gradients[1]);

  const auto e10 = scaled_losses(ScaledProblem(p, 10.0, 1), theta);
  CHECK(e10.losses[1] == 10.0);
  CHECK(e10.gradients[1] == vec({-10, 10}));
  CHECK(e10.gradients[0] == base.gradients[0]);

  const auto e50 = scaled_losses(ScaledProblem(p, 50.0, 1), theta);
  CHECK(e50.gradients[1].norm() == 50.0 * base.gradients[1].norm());

  CHECK_THROWS_AS(ScaledProblem(p, 0.5, 1), InputError);
  CHECK_THROWS_AS(ScaledProblem(p, 2.0, 2), InputError);
  CHECK_THROWS_AS(ScaledProblem(nullptr, 2.0, 0), InputError);
}

TEST_CASE("finite_diff_gradient examples") {
  const auto half_sq = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  CHECK((finite_diff_gradient(half_sq, vec({3, 4})) - vec({3, 4})).norm() <= 1e-8);
  CHECK(finite_diff_gradient([](const Vector&) { return 7.0; }, vec({1, 2, 3})).isZero());
  const auto p = unit_pair();
  const auto l1 = [&](const Vector& x) { return p->evaluate(x).losses[0]; };
  CHECK((finite_diff_gradient(l1, vec({0, 1})) - vec({1, 1})).norm() <= 1e-8);

  const auto nan = [](const Vector&) { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(finite_diff_gradient(nan, vec({1})), NumericalError);
  CHECK_THROWS_AS(finite_diff_gradient(half_sq, vec({1}), 0.0), InputError);
}

TEST_CASE("pareto_set_distance examples") {
  const auto p = unit_pair();
  CHECK(pareto_set_distance(*p, vec({0.3, 0})) <= 1e-15);
  CHECK(pareto_set_distance(*p, vec({0, 1})) == 1.0);
  CHECK(pareto_set_distance(*p, vec({2, 0})) == 1.0);
  CHECK(pareto_set_distance(*p, vec({-4, 4})) == doctest::Approx(5.0));
}

TEST_CASE("analytic gradients agree with finite differences") {
  Gen gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = static_cast<Eigen::Index>(trial % 2 == 0 ? 2 : 10);
    Vector a1 = gen.gaussian(d).cwiseAbs().array() + 0.1;
    Vector a2 = gen.gaussian(d).cwiseAbs().array() + 0.1;
    auto inner = std::make_shared<const QuadraticPair>(gen.gaussian(d), gen.gaussian(d), a1, a2);
    const ScaledProblem problem(inner, gen.uniform(1.0, 50.0), gen.index(0, 1));
    const Vector theta = gen.gaussian(d) * 3.0;
    const auto e = problem.evaluate(theta);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto li = [&](const Vector& x) { return problem.evaluate(x).losses[i]; };
      const Vector fd = finite_diff_gradient(li, theta);
      CHECK((fd - e.gradients[i]).norm() <= 1e-6 * std::max(1.0, e.gradients[i].norm()));
    }
  }
}

TEST_CASE("stationarity residual vanishes exactly on the segment") {
  Gen gen(32);
  const auto p = unit_pair();
  for (int trial = 0; trial < 200; ++trial) {
    Vector theta(2);
    if (trial % 2 == 0) {
      theta << gen.uniform(-1, 1), 0.0;  // on the segment
    } else {
      theta << gen.uniform(-3, 3), gen.uniform(-3, 3);
    }
    const double res = stationarity_residual(GradientSet(p->evaluate(theta).gradients)).residual;
    const double dist = pareto_set_distance(*p, theta);
    CHECK((res <= 1e-8) == (dist <= 1e-8));
  }
}
