#include "autowu/detector.hpp"
#include "autowu/gp.hpp"
#include "autowu/numerics.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>

namespace {

using namespace autowu;

gp::NormalizedObservations noisy_decay(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs(n);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = static_cast<double>(i) / static_cast<double>(n - 1);
        ys[i] = 1.0 + 2.0 * std::exp(-3.0 * xs[i]) + 0.05 * rng.normal();
    }
    return {xs, ys};
}

void BM_Cholesky(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto obs = noisy_decay(n, 1);
    Matrix k = gp::kernel_matrix(obs.xs(), obs.xs(), gp::GPParams::from_stds(0.0, 1.0, 0.1));
    for (std::size_t i = 0; i < n; ++i) k(i, i) += 0.01;
    for (auto _ : state) benchmark::DoNotOptimize(cholesky(k));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Cholesky)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNCubed);

void BM_Fit(benchmark::State& state) {
    const auto obs = noisy_decay(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(gp::fit(obs));
}
BENCHMARK(BM_Fit)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EndpointContrast(benchmark::State& state) {
    const auto obs = noisy_decay(static_cast<std::size_t>(state.range(0)), 3);
    const auto params = gp::initial_params(obs);
    for (auto _ : state) benchmark::DoNotOptimize(gp::p_min(gp::endpoint_contrast(obs, params)));
}
BENCHMARK(BM_EndpointContrast)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_FullPosterior(benchmark::State& state) {
    const auto obs = noisy_decay(static_cast<std::size_t>(state.range(0)), 4);
    const auto params = gp::initial_params(obs);
    for (auto _ : state) benchmark::DoNotOptimize(gp::p_min(gp::posterior(obs, params)));
}
BENCHMARK(BM_FullPosterior)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

// One detector test; work is capped by subsampling, so the trajectory length
// barely matters.
void BM_EpochTest(benchmark::State& state) {
    const auto length = static_cast<std::size_t>(state.range(0));
    LossTrajectory traj;
    traj.reserve(length);
    Rng noise(5);
    for (std::size_t t = 0; t < length; ++t) {
        const double base = 1.0 + 2.0 * std::exp(-3.0 * static_cast<double>(t) / static_cast<double>(length));
        traj.record(t, base * (1.0 + 0.03 * noise.normal()));
    }
    Rng rng(6);
    const DetectorConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(epoch_test(traj, cfg, rng));
}
BENCHMARK(BM_EpochTest)->Arg(1000)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
