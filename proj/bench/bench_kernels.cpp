// Serial reference kernels against their OpenMP versions.
#include <benchmark/benchmark.h>

#include <complex>
#include <random>
#include <vector>

#include "emcomb/spectral.hpp"
#include "emcomb/stability.hpp"
#include "emcomb/sweep.hpp"
#include "emcomb/units.hpp"

using namespace emcomb;

namespace {

std::vector<cdouble> noise_series(std::size_t n) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    std::vector<cdouble> x(n);
    for (auto& v : x) v = {nd(rng), nd(rng)};
    return x;
}

SweepPlan small_plan(int threads) {
    SweepPlan plan = plan_from_preset("desk-scale");
    plan.detunings = {0.8, 1.0};
    plan.powers_dbm = {-80.0, -66.0};
    plan.threads = threads;
    return plan;
}

void BM_PsdSerial(benchmark::State& state) {
    const auto x = noise_series(73728);
    for (auto _ : state) benchmark::DoNotOptimize(psd_serial(x, 48.384e6, 3.3e10, 8));
}

void BM_PsdParallel(benchmark::State& state) {
    const auto x = noise_series(73728);
    const PsdOptions opt{8, static_cast<int>(state.range(0))};
    for (auto _ : state) benchmark::DoNotOptimize(psd(x, 48.384e6, 3.3e10, opt));
}

void BM_ThresholdCurveSerial(benchmark::State& state) {
    const auto& p = preset("desk-scale").params;
    std::vector<double> d;
    for (int i = 0; i < 16; ++i) d.push_back((0.4 + 0.1 * i) * p.modes[0].omega);
    for (auto _ : state) benchmark::DoNotOptimize(threshold_curve_serial(p, d));
}

void BM_ThresholdCurveParallel(benchmark::State& state) {
    const auto& p = preset("desk-scale").params;
    std::vector<double> d;
    for (int i = 0; i < 16; ++i) d.push_back((0.4 + 0.1 * i) * p.modes[0].omega);
    ThresholdCurveOptions opt;
    opt.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(threshold_curve(p, d, opt));
}

void BM_SweepSerial(benchmark::State& state) {
    const SweepPlan plan = small_plan(1);
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep_serial(plan));
}

void BM_SweepParallel(benchmark::State& state) {
    const SweepPlan plan = small_plan(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep(plan));
}

}  // namespace

BENCHMARK(BM_PsdSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PsdParallel)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdCurveSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdCurveParallel)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kSecond)->Iterations(1);
BENCHMARK(BM_SweepParallel)->Arg(1)->Arg(8)->Unit(benchmark::kSecond)->Iterations(1);

BENCHMARK_MAIN();
