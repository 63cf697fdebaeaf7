#include <doctest.h>

#include <vector>

#include "edm/errors.hpp"
#include "edm/minnorm.hpp"
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

GramMatrix gram2(double a, double b, double c) {
  Matrix m(2, 2);
  m << a, b, b, c;
  return GramMatrix(m);
}

GramMatrix unit_gram(const std::vector<Vector>& vs) {
  std::vector<Vector> units;
  for (const auto& v : vs) units.push_back(v.normalized());
  return gram_matrix(units);
}

}  // namespace

TEST_CASE("gram_matrix of small vector sets") {
  const std::vector<Vector> basis = {vec({1, 0}), vec({0, 1})};
  CHECK(gram_matrix(basis).entries() == Matrix::Identity(2, 2));

  const std::vector<Vector> single = {vec({1, 0})};
  const GramMatrix g1 = gram_matrix(single);
  CHECK(g1.dim() == 1);
  CHECK(g1(0, 0) == 1.0);

  const std::vector<Vector> pair = {vec({2, 0}), vec({1, 0})};
  Matrix expected(2, 2);
  expected << 4, 2, 2, 1;
  CHECK(gram_matrix(pair).entries() == expected);
}

TEST_CASE("gram_matrix rejects bad input") {
  const std::vector<Vector> mismatch = {vec({1, 0}), vec({1, 0, 0})};
  CHECK_THROWS_AS(gram_matrix(mismatch), InputError);
  CHECK_THROWS_AS(gram_matrix(std::vector<Vector>{}), InputError);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(GramMatrix{asym}, InputError);
  CHECK_THROWS_AS(GramMatrix{Matrix(2, 3)}, InputError);
}

TEST_CASE("gram_matrix is symmetric, PSD, and unit-diagonal on unit vectors") {
  Gen gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = gen.index(1, 8);
    const auto vs = gen.gradient_set(t, static_cast<Eigen::Index>(gen.index(1, 20)));
    const GramMatrix g = gram_matrix(vs);
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j) CHECK(g(i, j) == g(j, i));
    }
    for (int k = 0; k < 10; ++k) {
      const Vector w = gen.simplex(t);
      CHECK(w.dot(g.entries() * w) >= -1e-12);
    }
    const GramMatrix gu = unit_gram(vs);
    for (std::size_t i = 0; i < t; ++i) CHECK(gu(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("SimplexWeights validation and helpers") {
  CHECK_NOTHROW(SimplexWeights(vec({0.25, 0.75})));
  CHECK_THROWS_AS(SimplexWeights(vec({-0.1, 1.1})), InputError);
  CHECK_THROWS_AS(SimplexWeights(vec({0.5, 0.6})), InputError);
  CHECK_THROWS_AS(SimplexWeights{Vector()}, InputError);
  CHECK(SimplexWeights::uniform(4)[3] == 0.25);
  CHECK(SimplexWeights::vertex(3, 1).values() == vec({0, 1, 0}));
  CHECK_THROWS_AS(SimplexWeights::vertex(3, 3), InputError);
  const auto n = SimplexWeights::normalized(vec({2, -1e-20, 6}));
  CHECK(n.values() == vec({0.25, 0, 0.75}));
}

TEST_CASE("FwConfig validation") {
  FwConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = FwConfig{};
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("combination_norm_sq examples") {
  CHECK(combination_norm_sq(gram2(1, 0, 1), SimplexWeights::uniform(2)) == doctest::Approx(0.5));
  CHECK(combination_norm_sq(GramMatrix(Matrix::Ones(1, 1)), SimplexWeights::uniform(1)) == 1.0);
  CHECK(combination_norm_sq(gram2(1, -1, 1), SimplexWeights::uniform(2)) == 0.0);
  CHECK_THROWS_AS(combination_norm_sq(gram2(1, 0, 1), SimplexWeights::uniform(3)), InputError);
}

TEST_CASE("fw_line_search examples") {
  CHECK(fw_line_search(gram2(1, 0, 1), SimplexWeights::vertex(2, 0), 1) == doctest::Approx(0.5));
  CHECK(fw_line_search(gram2(1, 0, 1), SimplexWeights::uniform(2), 0) == 0.0);
  CHECK(fw_line_search(gram2(100, 10, 1), SimplexWeights::vertex(2, 0), 1) == 1.0);
  CHECK_THROWS_AS(fw_line_search(gram2(1, 0, 1), SimplexWeights::uniform(2), 2), InputError);
}

TEST_CASE("fw_line_search: degenerate denominator returns 0") {
  // Identical vectors: every combination has the same norm.
  CHECK(fw_line_search(gram2(1, 1, 1), SimplexWeights::vertex(2, 0), 1) == 0.0);
}

TEST_CASE("fw_line_search matches an eta grid on random PSD matrices") {
  Gen gen(12);
  int cases[3] = {0, 0, 0};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = gen.index(2, 6);
    const auto vs = gen.gradient_set(t, static_cast<Eigen::Index>(gen.index(1, 6)));
    const GramMatrix g = gram_matrix(vs);
    // Alternate simplex points and vertices so all three branches occur.
    const Vector wv = trial % 3 == 0 ? SimplexWeights::vertex(t, gen.index(0, t - 1)).values() : gen.simplex(t);
    const SimplexWeights w = SimplexWeights::normalized(wv);
    const std::size_t target = gen.index(0, t - 1);
    const double eta = fw_line_search(g, w, target);
    const double grid = edm::testing::grid_line_search(g.entries(), w.values(), static_cast<Eigen::Index>(target), 1e-4);
    CHECK(std::abs(eta - grid) <= 1e-3);
    cases[eta == 0.0 ? 0 : eta == 1.0 ? 1 : 2]++;
  }
  CHECK(cases[0] > 0);
  CHECK(cases[1] > 0);
  CHECK(cases[2] > 0);
}

TEST_CASE("frank_wolfe_min_norm examples") {
  const auto half = frank_wolfe_min_norm(unit_gram({vec({1, 0}), vec({0, 1})}));
  CHECK(half[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(half[1] == doctest::Approx(0.5).epsilon(1e-9));

  const auto shortest = frank_wolfe_min_norm(gram_matrix(std::vector<Vector>{vec({10, 0}), vec({1, 0})}));
  CHECK(shortest[0] == doctest::Approx(0.0));
  CHECK(shortest[1] == doctest::Approx(1.0));

  const auto one = frank_wolfe_min_norm(GramMatrix(Matrix::Ones(1, 1)));
  CHECK(one.values() == vec({1}));

  FwConfig bad;
  bad.tolerance = -1;
  CHECK_THROWS_AS(frank_wolfe_min_norm(gram2(1, 0, 1), bad), InputError);
}

TEST_CASE("plain Frank-Wolfe follows the textbook recursion") {
  // With the fallback off, the iterates are exactly the prefix of one path,
  // so the objective is non-increasing in the iteration budget.
  Gen gen(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t t = gen.index(2, 7);
    const GramMatrix g = unit_gram(gen.gradient_set(t, static_cast<Eigen::Index>(gen.index(2, 12))));
    double previous = combination_norm_sq(g, SimplexWeights::uniform(t));
    for (std::size_t k = 1; k <= 40; ++k) {
      FwConfig cfg;
      cfg.max_iters = k;
      cfg.away_step_fallback = false;
      const FwReport r = frank_wolfe_min_norm_report(g, cfg);
      CHECK(r.away_iterations == 0);
      const double f = combination_norm_sq(g, r.weights);
      CHECK(f <= previous + 1e-15);
      previous = f;
    }
  }
}

TEST_CASE("first plain step matches a hand computation") {
  // Uniform start on three vectors, then one step toward argmin (M beta).
  Matrix m(3, 3);
  m << 1.0, 0.2, -0.5, 0.2, 1.0, 0.1, -0.5, 0.1, 1.0;
  FwConfig cfg;
  cfg.max_iters = 1;
  cfg.away_step_fallback = false;
  const FwReport r = frank_wolfe_min_norm_report(GramMatrix(m), cfg);
  const Vector b0 = Vector::Constant(3, 1.0 / 3.0);
  const Vector mb = m * b0;  // (0.2333, 0.4333, 0.2); argmin is index 2
  Eigen::Index target = 0;
  mb.minCoeff(&target);
  CHECK(target == 2);
  Vector e = Vector::Zero(3);
  e(2) = 1.0;
  const double eta = (b0.dot(mb) - mb(2)) / ((e - b0).dot(m * (e - b0)));
  const Vector expected = (1.0 - eta) * b0 + eta * e;
  CHECK(r.iterations == 1);
  CHECK(r.last_step == doctest::Approx(eta).epsilon(1e-14));
  CHECK((r.weights.values() - expected).norm() <= 1e-14);
}

TEST_CASE("solver objective is within 1e-4 of a simplex grid minimum") {
  Gen gen(14);
  for (int trial = 0; trial < 100; ++trial) {
    for (std::size_t t : {2u, 3u}) {
      const GramMatrix g = unit_gram(gen.gradient_set(t, static_cast<Eigen::Index>(gen.index(2, 10))));
      const double f = combination_norm_sq(g, frank_wolfe_min_norm(g));
      CHECK(f <= edm::testing::grid_min(g.entries(), t == 2 ? 1e-3 : 1e-2) + 1e-4);
    }
  }
}

TEST_CASE("two non-parallel unit vectors give equal weights") {
  Gen gen(15);
  for (int trial = 0; trial < 100; ++trial) {
    const auto vs = gen.gradient_set(2, static_cast<Eigen::Index>(gen.index(2, 10)));
    const auto w = frank_wolfe_min_norm(unit_gram(vs));
    CHECK(std::abs(w[0] - 0.5) <= 1e-6);
  }
}

TEST_CASE("solver output is a valid simplex point and deterministic") {
  Gen gen(16);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = gen.index(1, 8);
    const GramMatrix g = unit_gram(gen.gradient_set(t, static_cast<Eigen::Index>(gen.index(1, 30))));
    const auto a = frank_wolfe_min_norm(g);
    const auto b = frank_wolfe_min_norm(g);
    CHECK(a.values() == b.values());
    CHECK(a.values().minCoeff() >= 0.0);
    CHECK(std::abs(a.values().sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("fallback converges where plain Frank-Wolfe stalls") {
  // Four vectors whose min-norm point sits on a face: plain FW zig-zags.
  Gen gen(17);
  int fallback_used = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = gen.index(4, 8);
    const GramMatrix g = unit_gram(gen.gradient_set(t, static_cast<Eigen::Index>(gen.index(3, 50))));
    const FwReport r = frank_wolfe_min_norm_report(g);
    CHECK(r.converged);
    fallback_used += r.away_iterations > 0 ? 1 : 0;
  }
  CHECK(fallback_used > 0);
}
