#include <benchmark/benchmark.h>

#include <mvrff/optimizer.hpp>
#include <mvrff/prox.hpp>
#include <mvrff/randfeatures.hpp>
#include <mvrff/rng.hpp>
#include <mvrff/simdata.hpp>

using namespace mvrff;

namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 eng = make_engine(seed, "bench");
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(eng);
  return m;
}

void bm_feature_map(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), p = 50, M = 300;
  Matrix X = random_matrix(n, p, 1);
  RandomFeatureMap map = sample_frequencies(p, M, 1.5, 2);
  for (auto _ : state) benchmark::DoNotOptimize(feature_map(X, map));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_feature_map)->Arg(200)->Arg(1000);

void bm_project_simplex(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Vector v = random_matrix(p, 1, 3).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(project_simplex(v));
}
BENCHMARK(bm_project_simplex)->Arg(50)->Arg(2000);

void bm_prox_sparse_group(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Vector v = random_matrix(p, 1, 4).col(0);
  std::vector<int> labels(static_cast<size_t>(p));
  for (int s = 0; s < p; ++s) labels[static_cast<size_t>(s)] = s / 10;
  GroupStructure groups = GroupStructure::from_labels(labels);
  for (auto _ : state)
    benchmark::DoNotOptimize(prox_sparse_group(v, 0.05, 0.05, groups));
}
BENCHMARK(bm_prox_sparse_group)->Arg(50)->Arg(2000);

void bm_update_loadings(benchmark::State& state) {
  const int n = 500, M = static_cast<int>(state.range(0)), r = 3;
  Matrix Z = random_matrix(n, M, 5);
  Matrix G = random_matrix(n, r, 6);
  for (auto _ : state) benchmark::DoNotOptimize(update_loadings(Z, G, 1.0));
}
BENCHMARK(bm_update_loadings)->Arg(100)->Arg(300);

void bm_fit_small(benchmark::State& state) {
  SimSpec spec;
  spec.scenario = SimSpec::Scenario::Binary;
  spec.n1 = 60;
  spec.n2 = 40;
  spec.p = 25;
  spec.seed = 7;
  SimData d = gen_binary(spec);
  FitConfig cfg;
  cfg.feature_count = 50;
  cfg.components = 2;
  cfg.lambda = {0.01};
  cfg.max_outer_iter = 5;
  cfg.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(fit(d.views, d.outcome, cfg));
}
BENCHMARK(bm_fit_small)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
