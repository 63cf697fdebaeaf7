#include <doctest.h>

#include <cmath>
#include <vector>

#include "edm/direction.hpp"
#include "edm/errors.hpp"
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

GradientSet set(std::initializer_list<Vector> gs) { return GradientSet(std::vector<Vector>(gs)); }

bool near(const Vector& a, const Vector& b, double tol) { return (a - b).lpNorm<Eigen::Infinity>() <= tol; }

}  // namespace

TEST_CASE("GradientSet norms, units and active set") {
  const GradientSet g = set({vec({3, 4}), vec({0, 0}), vec({1e-13, 0})});
  CHECK(g.size() == 3);
  CHECK(g.dim() == 2);
  CHECK(g.norms()[0] == 5.0);
  CHECK(g.active() == std::vector<std::size_t>{0});
  CHECK(near(g.normalized()[0], vec({0.6, 0.8}), 1e-15));
  CHECK(g.normalized()[1].isZero());
  CHECK_THROWS_AS(GradientSet(std::vector<Vector>{}), InputError);
  CHECK_THROWS_AS(set({vec({1, 0}), vec({1})}), InputError);

  Gen gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    const GradientSet r(gen.gradient_set(gen.index(1, 6), static_cast<Eigen::Index>(gen.index(1, 30))));
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(r.norms()[i] == doctest::Approx(r.gradients()[i].norm()).epsilon(1e-12));
      CHECK(r.normalized()[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("edm_direction examples") {
  const auto d = edm_direction(set({vec({2, 0}), vec({0, 1})}));
  CHECK(near(d.weights.values(), vec({0.5, 0.5}), 1e-9));
  CHECK(near(d.raw_direction, vec({0.5, 0.5}), 1e-9));
  REQUIRE(d.gamma);
  CHECK(*d.gamma == doctest::Approx(4.0 / 3.0));
  CHECK(near(d.normalized_direction, vec({2.0 / 3.0, 2.0 / 3.0}), 1e-9));
  CHECK(d.support == std::vector<std::size_t>{0, 1});

  const auto anti = edm_direction(set({vec({1, 0}), vec({-1, 0})}));
  CHECK(anti.raw_direction.isZero());
  CHECK(anti.direction_norm == 0.0);
  CHECK(anti.stationary());

  const auto single = edm_direction(set({vec({3, 4})}));
  CHECK(single.weights.values() == vec({1}));
  CHECK(near(single.raw_direction, vec({0.6, 0.8}), 1e-15));
  CHECK(*single.gamma == doctest::Approx(5.0));
  CHECK(near(single.normalized_direction, vec({3, 4}), 1e-14));
}

TEST_CASE("edm_direction with zero gradients") {
  const auto all_zero = edm_direction(set({vec({0, 0}), vec({0, 0})}));
  CHECK(all_zero.stationary());
  CHECK(!all_zero.gamma);
  CHECK(all_zero.normalized_direction.isZero());

  // An inactive objective gets weight 0 and does not enter gamma.
  const auto partial = edm_direction(set({vec({0, 0}), vec({0, 2})}));
  CHECK(partial.weights[0] == 0.0);
  CHECK(partial.weights[1] == 1.0);
  CHECK(*partial.gamma == doctest::Approx(2.0));
  CHECK(near(partial.normalized_direction, vec({0, 2}), 1e-15));
}

TEST_CASE("mgda_direction examples") {
  const auto d = mgda_direction(set({vec({2, 0}), vec({0, 1})}));
  CHECK(near(d.weights.values(), vec({0.2, 0.8}), 1e-9));
  CHECK(near(d.raw_direction, vec({0.4, 0.8}), 1e-9));
  CHECK(!d.gamma);
  CHECK(d.normalized_direction == d.raw_direction);

  const auto same = mgda_direction(set({vec({1, 1}), vec({1, 1})}));
  CHECK(near(same.raw_direction, vec({1, 1}), 1e-15));

  const auto anti = mgda_direction(set({vec({1, 0}), vec({-1, 0})}));
  CHECK(anti.raw_direction.isZero());
  CHECK(anti.stationary());

  // A zero gradient is a hull vertex: the min-norm point is 0.
  const auto zero = mgda_direction(set({vec({0, 0}), vec({1, 2})}));
  CHECK(zero.stationary());
}

TEST_CASE("bisector_two examples and errors") {
  CHECK(near(bisector_two(vec({2, 0}), vec({0, 1})), vec({2.0 / 3.0, 2.0 / 3.0}), 1e-15));
  CHECK(near(bisector_two(vec({0, 5}), vec({0, 5})), vec({0, 5}), 1e-15));
  CHECK(near(bisector_two(vec({1, 0}), vec({0, 1})), vec({0.5, 0.5}), 1e-15));
  CHECK_THROWS_AS(bisector_two(vec({0, 0}), vec({0, 1})), InputError);
  CHECK_THROWS_AS(bisector_two(vec({1, 0}), vec({0, 1, 0})), InputError);
}

TEST_CASE("normalization_factor examples and errors") {
  const double r = 2.7;
  const std::vector<double> rr = {r, r};
  CHECK(normalization_factor(SimplexWeights::uniform(2), rr) == doctest::Approx(r));
  const std::vector<double> n21 = {2, 1};
  CHECK(normalization_factor(SimplexWeights::uniform(2), n21) == doctest::Approx(4.0 / 3.0));
  const std::vector<double> n5 = {5};
  CHECK(normalization_factor(SimplexWeights::uniform(1), n5) == 5.0);
  const std::vector<double> n0 = {0, 1};
  CHECK_THROWS_AS(normalization_factor(SimplexWeights::uniform(2), n0), InputError);
  CHECK(normalization_factor(SimplexWeights::vertex(2, 1), n0) == 1.0);
}

TEST_CASE("stationarity_residual examples") {
  const auto r = stationarity_residual(set({vec({2, 0}), vec({0, 1})}));
  CHECK(near(r.weights.values(), vec({1.0 / 3.0, 2.0 / 3.0}), 1e-9));
  CHECK(r.residual == doctest::Approx(2.0 * std::sqrt(2.0) / 3.0));

  CHECK(stationarity_residual(set({vec({1, 0}), vec({-1, 0})})).residual == 0.0);
  CHECK(stationarity_residual(set({vec({0, 0})})).residual == 0.0);
}

TEST_CASE("direction invariants on random gradient sets") {
  Gen gen(22);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t t = gen.index(2, 8);
    const GradientSet g(gen.gradient_set(t, static_cast<Eigen::Index>(gen.index(3, 50))));
    const auto d = edm_direction(g);
    const double sq = d.direction_norm * d.direction_norm;

    Vector combo = Vector::Zero(g.dim());
    for (std::size_t i = 0; i < t; ++i) combo += d.weights[i] * g.normalized()[i];
    CHECK((combo - d.raw_direction).norm() <= 1e-10);
    CHECK(d.direction_norm == doctest::Approx(d.raw_direction.norm()).epsilon(1e-12));

    for (std::size_t i = 0; i < t; ++i) {
      // variational inequality for every active objective
      CHECK(d.raw_direction.dot(g.normalized()[i]) >= sq - 1e-6);
    }
    for (std::size_t i : d.support) {
      // equiangular identity on the support
      const double gi = g.norms()[i];
      CHECK(std::abs(d.raw_direction.dot(g.gradients()[i]) - sq * gi) <= 1e-5 * std::max(1.0, gi));
    }

    // recovery: sum alpha_i g_i equals gamma d_b up to the alpha normalisation
    const auto st = stationarity_residual(g);
    Vector acombo = Vector::Zero(g.dim());
    double alpha_sum = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      acombo += st.weights[i] * g.gradients()[i];
      alpha_sum += *d.gamma * d.weights[i] / g.norms()[i];
    }
    CHECK(alpha_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((acombo - d.normalized_direction).norm() <= 1e-10 * std::max(1.0, d.normalized_direction.norm()));
    CHECK(st.residual == doctest::Approx(acombo.norm()).epsilon(1e-12));
  }
}

TEST_CASE("mgda interior property") {
  Gen gen(23);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const GradientSet g(gen.gradient_set(gen.index(2, 5), static_cast<Eigen::Index>(gen.index(3, 20))));
    const auto d = mgda_direction(g);
    Vector combo = Vector::Zero(g.dim());
    for (std::size_t i = 0; i < g.size(); ++i) combo += d.weights[i] * g.gradients()[i];
    CHECK((combo - d.raw_direction).norm() <= 1e-10 * std::max(1.0, combo.norm()));
    if (d.weights.values().minCoeff() <= 1e-3) continue;
    ++checked;
    const double sq = d.direction_norm * d.direction_norm;
    for (const auto& gi : g.gradients()) CHECK(std::abs(d.raw_direction.dot(gi) - sq) <= 1e-5 * std::max(1.0, sq));
  }
  CHECK(checked >= 50);
}

TEST_CASE("edm weights and direction are invariant to gradient scaling") {
  Gen gen(24);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t = gen.index(2, 6);
    auto gs = gen.gradient_set(t, static_cast<Eigen::Index>(gen.index(3, 20)));
    auto scaled = gs;
    for (auto& g : scaled) g *= std::ldexp(1.0, static_cast<int>(gen.index(0, 20)) - 10);
    const auto a = edm_direction(GradientSet(gs));
    const auto b = edm_direction(GradientSet(scaled));
    CHECK(a.weights.values() == b.weights.values());
    CHECK(a.raw_direction == b.raw_direction);

    // Arbitrary real scales perturb the unit vectors in the last ulp, which
    // can change the solver path; agreement is then at solver accuracy.
    for (auto& g : scaled) g = g * gen.uniform(0.01, 100.0);
    const auto c = edm_direction(GradientSet(scaled));
    CHECK((a.raw_direction - c.raw_direction).norm() <= 1e-5 * a.raw_direction.norm());
  }
}

TEST_CASE("two-gradient EDM equals the bisector; equal norms give the MGDA direction") {
  Gen gen(25);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gs = gen.gradient_set(2, static_cast<Eigen::Index>(gen.index(2, 10)));
    const auto d = edm_direction(GradientSet(gs));
    CHECK((d.normalized_direction - bisector_two(gs[0], gs[1])).norm() <= 1e-6);

    std::vector<Vector> equal = {gs[0], gs[1] * (gs[0].norm() / gs[1].norm())};
    const auto e = edm_direction(GradientSet(equal));
    const auto m = mgda_direction(GradientSet(equal));
    CHECK((e.normalized_direction - m.raw_direction).norm() <= 1e-6);
  }
}
