#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "edm/direction.hpp"
#include "edm/minnorm.hpp"
#include "edm/neural.hpp"
#include "edm/optimize.hpp"

namespace {

using namespace edm;

std::vector<Vector> gradients(std::size_t t, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> out;
  for (std::size_t i = 0; i < t; ++i) {
    Vector v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = normal(rng);
    out.push_back(v * (1.0 + static_cast<double>(i)));
  }
  return out;
}

void BM_FrankWolfe(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  std::vector<Vector> units;
  for (const auto& g : gradients(t, 64, 1)) units.push_back(g.normalized());
  const GramMatrix m = gram_matrix(units);
  for (auto _ : state) benchmark::DoNotOptimize(frank_wolfe_min_norm(m));
}
BENCHMARK(BM_FrankWolfe)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_EdmDirection(benchmark::State& state) {
  const GradientSet g(gradients(static_cast<std::size_t>(state.range(0)), state.range(1), 2));
  for (auto _ : state) benchmark::DoNotOptimize(edm_direction(g));
}
BENCHMARK(BM_EdmDirection)->Args({2, 1000})->Args({8, 1000})->Args({2, 100000});

void BM_MgdaDirection(benchmark::State& state) {
  const GradientSet g(gradients(static_cast<std::size_t>(state.range(0)), state.range(1), 3));
  for (auto _ : state) benchmark::DoNotOptimize(mgda_direction(g));
}
BENCHMARK(BM_MgdaDirection)->Args({2, 1000})->Args({8, 1000});

void BM_PerClassBackprop(benchmark::State& state) {
  const std::size_t sizes[] = {30, 100, 2};
  const MlpParams net = MlpParams::glorot(sizes, 4);
  const auto rows = state.range(0);
  LabeledBatch batch;
  batch.features = Matrix::Random(rows, 30);
  for (Eigen::Index i = 0; i < rows; ++i) batch.labels.push_back(i % 10 == 0 ? 1 : 0);
  const auto spec = ClassLossSpec::uniform(2);
  for (auto _ : state) benchmark::DoNotOptimize(per_class_losses(net, batch, spec));
}
BENCHMARK(BM_PerClassBackprop)->Arg(32)->Arg(256);

void BM_TwoTaskBackprop(benchmark::State& state) {
  const std::size_t trunk[] = {8, 32, 16};
  const TwoHeadMlp net = TwoHeadMlp::glorot(trunk, 4, 5);
  LabeledBatch batch;
  batch.features = Matrix::Random(256, 8);
  for (int i = 0; i < 256; ++i) {
    batch.labels.push_back(i % 4);
    batch.labels2.push_back((i / 4) % 4);
  }
  for (auto _ : state) benchmark::DoNotOptimize(two_task_gradients(net, batch));
}
BENCHMARK(BM_TwoTaskBackprop);

void BM_EdmQuadraticRun(benchmark::State& state) {
  Vector c = Vector::Zero(10);
  c(0) = 1.0;
  const QuadraticPair pair(-c, c);
  Vector theta0 = Vector::Constant(10, 2.0);
  OptimizerConfig cfg;
  cfg.max_iters = 10000;
  for (auto _ : state) benchmark::DoNotOptimize(run_edm(pair, theta0, cfg));
}
BENCHMARK(BM_EdmQuadraticRun);

}  // namespace
BENCHMARK_MAIN();
