#include "magspec/counting.hpp"
#include "magspec/dynamics.hpp"
#include "magspec/model2d.hpp"
#include "magspec/oscillator.hpp"
#include "magspec/tridiagonal.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace magspec;

namespace {

// Discrete -u'' + s^2 u on a uniform grid.
SymTridiagonal oscillator_matrix(std::size_t n) {
    const double step = 12.0 / static_cast<double>(n);
    SymTridiagonal t;
    t.diag.resize(n);
    t.off.assign(n - 1, -1.0 / (step * step));
    for (std::size_t i = 0; i < n; ++i) {
        const double s = -6.0 + step * static_cast<double>(i);
        t.diag[i] = 2.0 / (step * step) + s * s;
    }
    return t;
}

void BM_SturmCount(benchmark::State& state) {
    const auto t = oscillator_matrix(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sturm_count(t, 5.0));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SturmCount)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN);

void BM_LowestEigenvalues(benchmark::State& state) {
    const auto t = oscillator_matrix(4096);
    for (auto _ : state) benchmark::DoNotOptimize(lowest_eigenvalues(t, static_cast<std::size_t>(state.range(0)), 1e-12));
}
BENCHMARK(BM_LowestEigenvalues)->Arg(1)->Arg(4)->Arg(16);

void BM_SolveSpectrum(benchmark::State& state) {
    OscillatorGrid g;
    g.step = 1e-2;
    const auto bc = state.range(0) ? BoundaryCondition::neumann() : BoundaryCondition::dirichlet();
    for (auto _ : state) benchmark::DoNotOptimize(solve_spectrum(0.7, bc, 3, g));
}
BENCHMARK(BM_SolveSpectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BoundCorrectionBranch(benchmark::State& state) {
    OscillatorGrid g;
    g.step = 1e-2;
    for (auto _ : state) benchmark::DoNotOptimize(bound_correction_branch(BoundaryCondition::dirichlet(), 1.0, 0.2, g));
}
BENCHMARK(BM_BoundCorrectionBranch)->Unit(benchmark::kMillisecond);

void BM_OracleCount(benchmark::State& state) {
    OracleProblem op;
    op.L1 = 3.0;
    op.L2 = 2.0;
    op.n1 = static_cast<int>(state.range(0));
    op.n2 = static_cast<int>(state.range(0));
    op.params = ModelParams(3.0, 0.2);
    op.cap = 1'000'000;
    for (auto _ : state) benchmark::DoNotOptimize(oracle_count_2d(op, 1.0));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OracleCount)->RangeMultiplier(2)->Range(32, 128)->Unit(benchmark::kMillisecond);

void BM_HopFlow(benchmark::State& state) {
    const double mu = 20.0;
    const auto W = PotentialField::constant(1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate_flow(apex_state(0.3, 1.0, mu), W, ModelParams(mu, 0.01), 1.0));
    }
}
BENCHMARK(BM_HopFlow)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
