// Sizing guide for the three hot paths: the dense exact solve, the critic
// fit (SVD-backed least squares), and episode sampling. Sizes track the
// intended desk-scale workloads, not large-scale RL.

#include "pglab/baseline.hpp"
#include "pglab/critic.hpp"
#include "pglab/exact.hpp"
#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"
#include "pglab/sampling.hpp"

#include <benchmark/benchmark.h>

using namespace pglab;

namespace {

struct Setup {
    Mdp mdp;
    SoftmaxPolicy policy;

    static Setup make(int states, int actions) {
        Mdp mdp = make_random_mdp(states, actions, 0.99, 7);
        SoftmaxPolicy policy = SoftmaxPolicy::random(mdp, 2.0, 8);
        return {std::move(mdp), std::move(policy)};
    }
};

void BM_SolveExact(benchmark::State& state) {
    const Setup s = Setup::make(static_cast<int>(state.range(0)), 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_exact(s.mdp, s.policy));
    }
}
BENCHMARK(BM_SolveExact)->Arg(5)->Arg(20)->Arg(50);

void BM_FiniteDifferenceGradient(benchmark::State& state) {
    const Setup s = Setup::make(static_cast<int>(state.range(0)), 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(finite_difference_gradient(s.mdp, s.policy));
    }
}
BENCHMARK(BM_FiniteDifferenceGradient)->Arg(5)->Arg(20);

void BM_FitCritic(benchmark::State& state) {
    const Setup s = Setup::make(static_cast<int>(state.range(0)), 4);
    const ExactSolution exact = solve_exact(s.mdp, s.policy);
    const Baseline b = random_baseline(s.mdp, -10.0, 10.0, 9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_critic(s.mdp, s.policy, exact, b));
    }
}
BENCHMARK(BM_FitCritic)->Arg(5)->Arg(20)->Arg(50);

void BM_AssembleGradient(benchmark::State& state) {
    const Setup s = Setup::make(static_cast<int>(state.range(0)), 4);
    const ExactSolution exact = solve_exact(s.mdp, s.policy);
    const Baseline b = random_baseline(s.mdp, -10.0, 10.0, 9);
    const CriticFit fit = fit_critic(s.mdp, s.policy, exact, b);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_gradient_thm1(s.mdp, s.policy, exact, fit, b));
    }
}
BENCHMARK(BM_AssembleGradient)->Arg(5)->Arg(20)->Arg(50);

void BM_EstimateGradient(benchmark::State& state) {
    const Setup s = Setup::make(10, 3);
    EstimatorSpec spec;
    spec.kind = EstimatorKind::Reinforce;
    const long episodes = state.range(0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_gradient(s.mdp, s.policy, spec, episodes, seed++));
    }
    state.SetItemsProcessed(state.iterations() * episodes);
}
BENCHMARK(BM_EstimateGradient)->Arg(1000)->Arg(10000);

} // namespace

BENCHMARK_MAIN();
