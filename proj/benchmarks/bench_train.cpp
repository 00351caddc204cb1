#include "autowu/optim.hpp"
#include "autowu/train.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace autowu;

void BM_OptimizerStep(benchmark::State& state) {
    const auto kind = static_cast<optim::OptimizerKind>(state.range(0));
    const auto cfg = optim::OptimizerConfig::defaults(kind);
    const std::size_t dim = 4096;
    Rng rng(1);
    std::vector<double> w(dim);
    std::vector<double> g(dim);
    for (auto& v : w) v = rng.normal();
    for (auto& v : g) v = rng.normal();
    optim::ParamGroup group(w, "layer0.weight");
    for (auto _ : state) {
        optim::optimizer_step(group, g, 1e-3, cfg);
        benchmark::ClobberMemory();
    }
    state.SetLabel(std::string(optim::to_string(kind)));
}
BENCHMARK(BM_OptimizerStep)->DenseRange(0, 3);

void BM_ForwardBackward(benchmark::State& state) {
    train::DatasetSpec ds;
    ds.n_samples = 4096;
    ds.n_features = 8;
    ds.n_classes = 4;
    const auto data = train::make_dataset(ds);
    train::ModelSpec spec;
    spec.hidden_sizes = {32};
    const train::Model model(spec, ds.n_features, ds.n_classes);
    std::vector<std::size_t> batch(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
    for (auto _ : state) benchmark::DoNotOptimize(train::forward_backward(model, data, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(512);

} // namespace

BENCHMARK_MAIN();
