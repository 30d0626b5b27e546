#include <benchmark/benchmark.h>

#include "scmlab/controllers.hpp"
#include "scmlab/metrics.hpp"
#include "scmlab/qp.hpp"
#include "scmlab/timeseries.hpp"

using namespace scmlab;

namespace {

const BatterySpec kSpec{-2.0, 2.0, 0.0, 4.0, 1.0};

PowerProfile month_profile() {
    SynthParams sp;
    sp.days = 30;
    sp.seed = 7;
    return synth_profile(sp);
}

void BM_OccamStep(benchmark::State& state) {
    double e = 2.0;
    for (auto _ : state) {
        auto [p, e_new] = occam_step(1.2, 0.8, e, 0.5, kSpec);
        benchmark::DoNotOptimize(p);
        e = e_new * 0.5 + 1.0;
    }
}
BENCHMARK(BM_OccamStep);

void BM_MosStep(benchmark::State& state) {
    const HyperParams hp{0.1, 1.0, 0.2};
    double e = 2.0;
    for (auto _ : state) {
        auto [p, e_new] = mos_step(0.4, -0.6, 0.3, e, hp, 0.5, kSpec);
        benchmark::DoNotOptimize(p);
        e = e_new * 0.5 + 1.0;
    }
}
BENCHMARK(BM_MosStep);

void BM_SimulateOccamMonth(benchmark::State& state) {
    const auto profile = month_profile();
    for (auto _ : state) {
        auto trace = simulate(profile, kSpec, OccamPolicy{});
        benchmark::DoNotOptimize(trace.p_g_kw.data());
    }
}
BENCHMARK(BM_SimulateOccamMonth);

void BM_SimulateMosMonth(benchmark::State& state) {
    const auto profile = month_profile();
    for (auto _ : state) {
        auto trace = simulate(profile, kSpec, MosPolicy{{0.1, 1.0, 0.2}});
        benchmark::DoNotOptimize(trace.p_g_kw.data());
    }
}
BENCHMARK(BM_SimulateMosMonth);

void BM_HorizonSolve48(benchmark::State& state) {
    const auto profile = month_profile();
    std::vector<double> net(48);
    for (int t = 0; t < 48; ++t) net[static_cast<std::size_t>(t)] =
        profile.demand_kw[static_cast<std::size_t>(t)] - profile.pv_kw[static_cast<std::size_t>(t)];
    HorizonSolver solver(48, 0.5, kSpec);
    for (auto _ : state) {
        auto sol = solver.solve(net, 2.0);
        benchmark::DoNotOptimize(sol.objective_value);
    }
}
BENCHMARK(BM_HorizonSolve48);

}  // namespace

BENCHMARK_MAIN();
