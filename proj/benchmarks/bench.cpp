#include <benchmark/benchmark.h>

#include "riskplan/gridworld.hpp"
#include "riskplan/mdp_solver.hpp"
#include "riskplan/model.hpp"
#include "riskplan/pomdp_solver.hpp"
#include "riskplan/risk.hpp"
#include "riskplan/rng.hpp"

using namespace riskplan;

namespace {

Vec random_dist(CounterRng& rng, int n) {
    Vec p(n);
    double sum = 0.0;
    for (double& x : p) {
        x = 0.01 + rng.next_double();
        sum += x;
    }
    for (double& x : p) x /= sum;
    return p;
}

void BM_SigmaExpectation(benchmark::State& state) {
    CounterRng rng(1);
    const int n = static_cast<int>(state.range(0));
    Vec v(n);
    for (double& x : v) x = 10.0 * rng.next_double();
    const Vec p = random_dist(rng, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sigma(RiskMeasure::expectation(), v, p));
    }
}
BENCHMARK(BM_SigmaExpectation)->Arg(9)->Arg(100);

void BM_SigmaCvar(benchmark::State& state) {
    CounterRng rng(2);
    const int n = static_cast<int>(state.range(0));
    Vec v(n);
    for (double& x : v) x = 10.0 * rng.next_double();
    const Vec p = random_dist(rng, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sigma(RiskMeasure::cvar(0.2), v, p));
    }
}
BENCHMARK(BM_SigmaCvar)->Arg(9)->Arg(100);

void BM_SigmaEvar(benchmark::State& state) {
    CounterRng rng(3);
    const int n = static_cast<int>(state.range(0));
    Vec v(n);
    for (double& x : v) x = 10.0 * rng.next_double();
    const Vec p = random_dist(rng, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sigma(RiskMeasure::evar(0.2), v, p));
    }
}
BENCHMARK(BM_SigmaEvar)->Arg(9)->Arg(100);

GridSpec bench_spec(int side) {
    GridSpec spec;
    spec.rows = side;
    spec.cols = side;
    spec.goal = {0, side - 1};
    spec.start = {side - 1, 0};
    spec.n_uncertain = 3;
    spec.seed = 42;
    return spec;
}

void BM_ValueIteration10x10(benchmark::State& state) {
    const Mdp mdp = build_mdp(bench_spec(10));
    const RiskMeasure measure =
        state.range(0) == 0   ? RiskMeasure::expectation()
        : state.range(0) == 1 ? RiskMeasure::cvar(0.2)
                              : RiskMeasure::evar(0.2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(risk_value_iteration(mdp, measure, {0.0}, SolverParams{}));
    }
}
BENCHMARK(BM_ValueIteration10x10)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_ProductChainBuild(benchmark::State& state) {
    const Pomdp pomdp = build_pomdp(bench_spec(10));
    Fsc fsc = Fsc::uniform_initial(kNumGridActions, pomdp.num_observations);
    for (auto _ : state) {
        benchmark::DoNotOptimize(product_chain(pomdp, fsc));
    }
}
BENCHMARK(BM_ProductChainBuild)->Unit(benchmark::kMillisecond);

void BM_EvaluateFsc(benchmark::State& state) {
    const Pomdp pomdp = build_pomdp(bench_spec(8));
    const Fsc fsc = Fsc::uniform_initial(kNumGridActions, pomdp.num_observations);
    SolverParams params;
    params.vi_tol = 1e-6;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            evaluate_fsc(pomdp, fsc, RiskMeasure::cvar(0.2), {0.0}, params));
    }
}
BENCHMARK(BM_EvaluateFsc)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
