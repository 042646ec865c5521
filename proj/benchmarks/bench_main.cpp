#include "mlsvm/coarsen.hpp"
#include "mlsvm/data.hpp"
#include "mlsvm/driver.hpp"
#include "mlsvm/graph.hpp"
#include "mlsvm/svm.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace mlsvm;

Dataset twonorm(std::size_t n) { return zscore_normalize(gen_synthetic(SyntheticKind::twonorm, n, 1)); }

void BM_SmoTrain(benchmark::State& state) {
    const auto d = twonorm(static_cast<std::size_t>(state.range(0)));
    const std::vector<double> weights(d.size(), 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(smo_train(d.points, d.labels, 1.0, weights, 0.05));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SmoTrain)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_KnnExact(benchmark::State& state) {
    const auto d = twonorm(static_cast<std::size_t>(state.range(0)));
    KnnOptions options;
    options.mode = KnnMode::exact;
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_knn_graph(d.points, 10, options));
    }
}
BENCHMARK(BM_KnnExact)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_KnnApproximate(benchmark::State& state) {
    const auto d = twonorm(static_cast<std::size_t>(state.range(0)));
    KnnOptions options;
    options.mode = KnnMode::approximate;
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_knn_graph(d.points, 10, options));
    }
}
BENCHMARK(BM_KnnApproximate)->Arg(8000)->Arg(32000)->Unit(benchmark::kMillisecond);

void BM_CoarsenAmg(benchmark::State& state) {
    const auto d = twonorm(static_cast<std::size_t>(state.range(0)));
    ClassLevel fine;
    fine.points = d.points;
    fine.graph = build_knn_graph(d.points, 10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(coarsen_amg(fine, CoarseningParams{}));
    }
}
BENCHMARK(BM_CoarsenAmg)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_TrainMultilevel(benchmark::State& state) {
    const auto d = gen_synthetic(SyntheticKind::twonorm, static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mlsvm_train(d, Config{}));
    }
}
BENCHMARK(BM_TrainMultilevel)->Arg(5000)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
