#include <benchmark/benchmark.h>

#include "twincbr/cf_casebased.hpp"
#include "twincbr/data_model.hpp"
#include "twincbr/neural_twin.hpp"
#include "twincbr/random.hpp"
#include "twincbr/retrieval.hpp"

namespace twincbr {
namespace {

CaseBase blobs(int n_per_class) {
  return synth_blobs(n_per_class, 2, {{0, 0}, {2.5, 2.5}}, 1.0, 1);
}

void BM_KnnFeatureSpace(benchmark::State& state) {
  const auto base = blobs(static_cast<int>(state.range(0)));
  const auto index = build_feature_index(base);
  Rng rng(3);
  for (auto _ : state) {
    const std::vector<double> q{rng.uniform(), rng.uniform()};
    benchmark::DoNotOptimize(knn(index, q, KnnQuery{.k = 5}));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KnnFeatureSpace)->Arg(100)->Arg(1000)->Arg(5000);

void BM_Forward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const auto model = MlpModel::initialize({16, width, width, 4}, Head::kSoftmax, {}, 1);
  Rng rng(5);
  std::vector<double> x(16);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64)->Arg(256);

void BM_InputGradient(benchmark::State& state) {
  const auto model = MlpModel::initialize({16, 64, 64, 4}, Head::kSoftmax, {}, 1);
  std::vector<double> x(16, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(input_gradient(model, x, 1));
}
BENCHMARK(BM_InputGradient);

void BM_MineExplanationCases(benchmark::State& state) {
  const auto base = synth_imbalanced(static_cast<int>(state.range(0)),
                                     static_cast<int>(state.range(0)) / 4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mine_explanation_cases(base));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MineExplanationCases)->Arg(100)->Arg(400)->Complexity(benchmark::oNSquared);

void BM_ContributionIndex(benchmark::State& state) {
  const auto base = blobs(500);
  const auto model = fit_model(base, {8}, TrainConfig{.epochs = 5}).model;
  for (auto _ : state) benchmark::DoNotOptimize(build_contribution_index(model, base));
}
BENCHMARK(BM_ContributionIndex);

}  // namespace
}  // namespace twincbr

BENCHMARK_MAIN();
