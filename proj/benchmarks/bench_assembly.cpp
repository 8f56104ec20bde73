#include "fkv/assembly.hpp"

#include <benchmark/benchmark.h>

using namespace fkv;

namespace {

CrackedMesh plate(int cells) {
    GeometrySpec g;
    g.kind = GeometrySpec::Kind::Rectangle;
    g.nx = g.ny = cells;
    g.dirichlet = {"bottom"};
    g.cracks.push_back({0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)}});
    return build_mesh(g);
}

} // namespace

static void BM_Stiffness(benchmark::State& state) {
    const CrackedMesh m = plate(static_cast<int>(state.range(0)));
    const SymTensor c = isotropic_tensor(1.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(stiffness_matrix(m, c));
    state.counters["elements"] = m.num_elements();
}
BENCHMARK(BM_Stiffness)->Arg(16)->Arg(32)->Arg(64);

static void BM_Operators(benchmark::State& state) {
    const CrackedMesh m = plate(static_cast<int>(state.range(0)));
    const Material mat = Material::create(isotropic_tensor(1.0, 1.0), isotropic_tensor(0.5, 0.5));
    for (auto _ : state) benchmark::DoNotOptimize(assemble_operators(m, mat, mat.viscous));
}
BENCHMARK(BM_Operators)->Arg(32);

static void BM_SpaceAt(benchmark::State& state) {
    const CrackedMesh m = plate(static_cast<int>(state.range(0)));
    CrackSchedule s;
    s.release_time[0] = 0.5;
    for (auto _ : state) benchmark::DoNotOptimize(space_at(m, s, 0, 0.01));
}
BENCHMARK(BM_SpaceAt)->Arg(32);
