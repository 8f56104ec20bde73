#include "fkv/kernel.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

using namespace fkv;

static void BM_CaputoEval(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = std::sin(3.0 * i / n);
    for (auto _ : state) benchmark::DoNotOptimize(caputo_eval(g, 1.0 / n, 0.5));
    state.SetComplexityN(n);
}
BENCHMARK(BM_CaputoEval)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oNSquared);

static void BM_SampleGrid(benchmark::State& state) {
    const auto k = RegularizedKernel::shifted(FractionalKernel(0.5, scalar_tensor(1, 1.0)), 1e-2);
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sample_grid(k, n, 1.0));
}
BENCHMARK(BM_SampleGrid)->Arg(200)->Arg(2000);

static void BM_PositivityMatrix(benchmark::State& state) {
    const auto k = RegularizedKernel::shifted(FractionalKernel(0.5, scalar_tensor(1, 1.0)), 1e-3);
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernel_positivity_matrix(k, n, 1.0 / n));
}
BENCHMARK(BM_PositivityMatrix)->Arg(64)->Arg(256);
