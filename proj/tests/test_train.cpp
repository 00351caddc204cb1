#include "autowu/error.hpp"
#include "autowu/train.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

namespace autowu::train {
namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.dataset.n_samples = 256;
    cfg.dataset.n_features = 4;
    cfg.dataset.n_classes = 3;
    cfg.dataset.noise = 1.0;
    cfg.dataset.seed = 3;
    cfg.model.hidden_sizes = {8};
    cfg.model.seed = 3;
    cfg.batch_size = 32;
    cfg.epochs = 6;
    cfg.seed = 3;
    AutoWUConfig a;
    a.detector.grid_size = 100;
    cfg.scheduler = a;
    return cfg;
}

TEST(Dataset, DeterministicInSeed) {
    for (auto kind : {DatasetKind::gaussian_blobs, DatasetKind::two_moons, DatasetKind::spiral}) {
        DatasetSpec spec;
        spec.kind = kind;
        spec.n_samples = 101;
        spec.seed = 9;
        const auto a = make_dataset(spec);
        const auto b = make_dataset(spec);
        EXPECT_EQ(a.features, b.features);
        EXPECT_EQ(a.labels, b.labels);
        EXPECT_EQ(a.size(), 101u);
    }
}

TEST(Dataset, ClassBalanced) {
    DatasetSpec spec;
    spec.n_samples = 103;
    spec.n_classes = 4;
    const auto d = make_dataset(spec);
    std::map<std::size_t, std::size_t> counts;
    for (auto l : d.labels) ++counts[l];
    ASSERT_EQ(counts.size(), 4u);
    for (const auto& [label, n] : counts) {
        EXPECT_GE(n, 103u / 4);
        EXPECT_LE(n, 103u / 4 + 1);
    }
}

TEST(Dataset, Validation) {
    DatasetSpec spec;
    spec.n_samples = 3;
    spec.n_classes = 4;
    EXPECT_THROW(make_dataset(spec), InvalidSpec);
    spec = DatasetSpec{};
    spec.kind = DatasetKind::two_moons;
    spec.n_classes = 3;
    EXPECT_THROW(make_dataset(spec), InvalidSpec);
}

TEST(Dataset, NoiselessBlobsAreSeparable) {
    ExperimentConfig cfg;
    cfg.dataset.n_samples = 400;
    cfg.dataset.n_features = 2;
    cfg.dataset.n_classes = 2;
    cfg.dataset.noise = 0.0;
    cfg.dataset.seed = 1;
    cfg.model.kind = ModelKind::logistic_regression;
    cfg.model.hidden_sizes.clear();
    cfg.optimizer = optim::OptimizerConfig::defaults(optim::OptimizerKind::adam);
    cfg.scheduler = FixedLR{0.05};
    cfg.batch_size = 40;
    cfg.epochs = 30;
    const auto log = run_experiment(cfg);
    EXPECT_GE(log.epochs.back().eval_acc, 0.99);
}

TEST(Model, InitializationBoundsAndGroups) {
    ModelSpec spec;
    spec.hidden_sizes = {5, 7};
    spec.seed = 4;
    const Model m(spec, 3, 2);
    ASSERT_EQ(m.params().size(), 6u);
    EXPECT_EQ(m.parameter_count(), 3u * 5 + 5 + 5 * 7 + 7 + 7 * 2 + 2);
    const std::vector<std::pair<std::size_t, std::size_t>> fans{{3, 5}, {5, 7}, {7, 2}};
    for (std::size_t l = 0; l < 3; ++l) {
        const auto& w = m.params()[2 * l];
        const auto& b = m.params()[2 * l + 1];
        EXPECT_EQ(w.layer_id, "layer" + std::to_string(l) + ".weight");
        EXPECT_TRUE(w.projectable);
        EXPECT_FALSE(b.projectable);
        const double bound = std::sqrt(6.0 / static_cast<double>(fans[l].first + fans[l].second));
        for (double v : w.values) EXPECT_LE(std::abs(v), bound);
        for (double v : b.values) EXPECT_EQ(v, 0.0);
    }
    const Model again(spec, 3, 2);
    EXPECT_EQ(m.params()[0].values, again.params()[0].values);
}

TEST(ForwardBackward, ZeroLogitsGiveLogK) {
    ModelSpec spec;
    spec.kind = ModelKind::logistic_regression;
    spec.hidden_sizes.clear();
    Model m(spec, 4, 5);
    for (auto& g : m.params()) std::fill(g.values.begin(), g.values.end(), 0.0);
    DatasetSpec ds;
    ds.n_features = 4;
    ds.n_classes = 5;
    ds.n_samples = 50;
    const auto data = make_dataset(ds);
    const std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5};
    EXPECT_NEAR(forward_backward(m, data, batch).loss, std::log(5.0), 1e-14);
}

TEST(ForwardBackward, GradientsMatchFiniteDifferences) {
    for (auto act : {Activation::relu, Activation::tanh}) {
        // 2 features -> 2 hidden -> 2 classes: 6 + 6 = 12 parameters, and a
        // 10-parameter logistic model.
        for (bool hidden : {false, true}) {
            ModelSpec spec;
            spec.activation = act;
            spec.seed = 11;
            if (hidden) {
                spec.hidden_sizes = {2};
            } else {
                spec.kind = ModelKind::logistic_regression;
                spec.hidden_sizes.clear();
            }
            DatasetSpec ds;
            ds.n_features = hidden ? 2 : 4;
            ds.n_classes = 2;
            ds.n_samples = 20;
            ds.seed = 2;
            const auto data = make_dataset(ds);
            Model m(spec, ds.n_features, 2);
            const std::vector<std::size_t> batch{0, 3, 5, 8, 13};
            const auto fb = forward_backward(m, data, batch);
            for (std::size_t g = 0; g < m.params().size(); ++g) {
                for (std::size_t i = 0; i < m.params()[g].values.size(); ++i) {
                    auto f = [&](const std::vector<double>& v) {
                        Model copy = m;
                        copy.params()[g].values = v;
                        return forward_backward(copy, data, batch).loss;
                    };
                    const double fd = oracle::central_difference(f, m.params()[g].values, i, 1e-6);
                    EXPECT_NEAR(fb.grads[g][i], fd, 1e-5 * std::max(1.0, std::abs(fd)))
                        << "group " << g << " index " << i;
                }
            }
        }
    }
}

TEST(ForwardBackward, DuplicatedBatchHasSameLoss) {
    const auto cfg = small_config();
    const auto data = make_dataset(cfg.dataset);
    const Model m(cfg.model, data.n_features(), data.n_classes);
    const std::vector<std::size_t> once{1, 4, 9};
    const std::vector<std::size_t> twice{1, 4, 9, 1, 4, 9};
    EXPECT_NEAR(forward_backward(m, data, once).loss, forward_backward(m, data, twice).loss, 1e-15);
}

TEST(ExperimentConfig, StepArithmetic) {
    auto cfg = small_config();
    cfg.dataset.n_samples = 250;
    EXPECT_EQ(cfg.steps_per_epoch(), 8u);
    EXPECT_EQ(cfg.total_steps(), 48u);
}

TEST(RunExperiment, ZeroLearningRateFreezesTheModel) {
    auto cfg = small_config();
    cfg.scheduler = FixedLR{0.0};
    cfg.batch_size = cfg.dataset.n_samples;
    const auto log = run_experiment(cfg);
    ASSERT_EQ(log.steps.size(), cfg.total_steps());
    // Full-batch losses only differ by the summation order of the shuffled rows.
    for (const auto& s : log.steps) EXPECT_NEAR(s.train_loss, log.steps.front().train_loss, 1e-13);
    for (const auto& e : log.epochs) EXPECT_EQ(e.eval_loss, log.epochs.front().eval_loss);
    EXPECT_EQ(log.steps.front().phase, "constant");
}

TEST(RunExperiment, EpochSamplingIsAPermutation) {
    // With a frozen model, the mean of the per-batch losses over one epoch
    // equals the full-data loss only if every sample is drawn exactly once.
    auto cfg = small_config();
    cfg.scheduler = FixedLR{0.0};
    const auto log = run_experiment(cfg);
    const std::size_t per_epoch = cfg.steps_per_epoch();
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        double sum = 0.0;
        for (std::size_t b = 0; b < per_epoch; ++b) sum += log.steps[e * per_epoch + b].train_loss;
        EXPECT_NEAR(sum / static_cast<double>(per_epoch), log.epochs[e].eval_loss, 1e-12);
    }
}

TEST(RunExperiment, AutoWULogShape) {
    const auto cfg = small_config();
    const auto log = run_experiment(cfg);
    ASSERT_EQ(log.steps.size(), cfg.total_steps());
    ASSERT_EQ(log.epochs.size(), cfg.epochs);
    for (std::size_t i = 0; i < log.steps.size(); ++i) EXPECT_EQ(log.steps[i].step, i);
    ASSERT_TRUE(log.switch_info.has_value());
    EXPECT_GT(log.switch_info->decay_start_lr, 0.0);
    int transitions = 0;
    for (std::size_t i = 1; i < log.steps.size(); ++i) {
        if (log.steps[i].phase != log.steps[i - 1].phase) ++transitions;
    }
    EXPECT_EQ(transitions, 1);
    EXPECT_EQ(log.steps.front().phase, "warmup");
    EXPECT_EQ(log.steps.back().phase, "decay");
    EXPECT_EQ(log.p_min_columns, 5u);
    EXPECT_EQ(log.scheduler_kind, "autowu");
    EXPECT_EQ(log.status, "completed");
}

TEST(RunExperiment, Deterministic) {
    const auto cfg = small_config();
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    EXPECT_EQ(steps_csv(a), steps_csv(b));
    EXPECT_EQ(epochs_csv(a), epochs_csv(b));
    EXPECT_EQ(a.config_hash, b.config_hash);
}

TEST(RunExperiment, BaselineFollowsItsTrace) {
    auto cfg = small_config();
    BaselineConfig b;
    b.warmup_epochs = 2;
    cfg.scheduler = b;
    const auto log = run_experiment(cfg);
    b.total_steps = cfg.total_steps();
    b.steps_per_epoch = cfg.steps_per_epoch();
    b.batch_size = cfg.batch_size;
    for (const auto& s : log.steps) EXPECT_EQ(s.lr, baseline_lr(s.step, b));
    EXPECT_EQ(log.steps[0].lr, 0.0);
}

TEST(RunExperiment, NonFiniteLossAbortsWithPartialLog) {
    auto cfg = small_config();
    cfg.optimizer = optim::OptimizerConfig::defaults(optim::OptimizerKind::sgd);
    cfg.scheduler = FixedLR{1e300};
    try {
        run_experiment(cfg);
        FAIL() << "expected RunAborted";
    } catch (const RunAborted& e) {
        const auto& log = e.partial_log();
        EXPECT_EQ(log.status, "diverged");
        ASSERT_FALSE(log.steps.empty());
        EXPECT_TRUE(std::isnan(log.steps.back().train_loss) || !std::isfinite(log.epochs.back().eval_loss));
        EXPECT_LT(log.steps.size(), cfg.total_steps() + 1);
    }
}

TEST(RunExperiment, RejectsInconsistentConfig) {
    auto cfg = small_config();
    cfg.batch_size = 1000;
    EXPECT_THROW(run_experiment(cfg), InvalidSpec);
}

} // namespace
} // namespace autowu::train
