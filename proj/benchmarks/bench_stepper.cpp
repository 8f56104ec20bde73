#include "fkv/energy.hpp"
#include "fkv/stepper.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace fkv;

namespace {

Problem plate_problem(int cells) {
    GeometrySpec g;
    g.kind = GeometrySpec::Kind::Rectangle;
    g.nx = g.ny = cells;
    g.dirichlet = {"bottom"};
    g.cracks.push_back({0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)}});
    CrackSchedule s;
    s.release_time[0] = 0.0;
    auto mesh = std::make_shared<const CrackedMesh>(build_mesh(g));
    ProblemData d = ProblemData::zero(2);
    Eigen::VectorXd amp(2);
    amp << 0.3, -0.2;
    d.f = SpaceTimeField::from_terms(2, {{amp, {TimeFactor::Kind::Sine, 4.0, 0.3}, {}}});
    Material m = Material::create(isotropic_tensor(1.0, 1.0), isotropic_tensor(0.5, 0.5));
    const auto k = RegularizedKernel::shifted(FractionalKernel(0.5, m.viscous), 1e-2);
    return make_problem(mesh, s, m, k, d, 1.0);
}

} // namespace

// Whole run: one factorization plus n history convolutions and solves.
static void BM_Solve(benchmark::State& state) {
    const Problem p = plate_problem(static_cast<int>(state.range(0)));
    SolverConfig c;
    c.n = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(solve(p, c));
    state.counters["steps/s"] = benchmark::Counter(static_cast<double>(c.n) * state.iterations(),
                                                   benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Solve)->Args({16, 100})->Args({16, 200})->Args({32, 200})->Unit(benchmark::kMillisecond);

static void BM_IterativeSolve(benchmark::State& state) {
    const Problem p = plate_problem(32);
    SolverConfig c;
    c.n = 100;
    c.linear_tol = 1e-12;
    for (auto _ : state) benchmark::DoNotOptimize(solve(p, c));
}
BENCHMARK(BM_IterativeSolve)->Unit(benchmark::kMillisecond);

static void BM_EnergyAudit(benchmark::State& state) {
    const Problem p = plate_problem(16);
    const int n = static_cast<int>(state.range(0));
    const KernelSamples s = sample_grid(p.kernel, n, p.T);
    SolverConfig c;
    c.n = n;
    auto ctx = init(p, s, c);
    const DiscreteTrajectory tr = run(*ctx);
    for (auto _ : state) benchmark::DoNotOptimize(discrete_energy_audit(tr, s, p));
}
BENCHMARK(BM_EnergyAudit)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
