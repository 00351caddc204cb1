#include "autowu/config_io.hpp"
#include "autowu/error.hpp"

#include <gtest/gtest.h>

#include <string>

namespace autowu {
namespace {

std::string field_of(const std::string& text) {
    try {
        parse_experiment_config(text);
    } catch (const ConfigInvalid& e) {
        return e.field();
    }
    return "";
}

TEST(ParseExperimentConfig, EmptyObjectGivesDefaults) {
    const auto cfg = parse_experiment_config("{}");
    const auto& a = std::get<AutoWUConfig>(cfg.scheduler);
    EXPECT_EQ(a.eta_min, 1e-5);
    EXPECT_EQ(a.eta_max, 1.0);
    EXPECT_EQ(a.rho_w, 0.5);
    EXPECT_EQ(a.detector.n_test, 5u);
    EXPECT_EQ(a.detector.confidence, 0.95);
    EXPECT_EQ(a.detector.patience, 3u);
    EXPECT_EQ(a.tail_fraction, 0.2);
    EXPECT_EQ(cfg.optimizer.kind, optim::OptimizerKind::adamp);
    EXPECT_EQ(cfg.batch_size, 64u);
    EXPECT_FALSE(cfg.record_timing);
}

TEST(ParseExperimentConfig, ReadsNestedFields) {
    const auto cfg = parse_experiment_config(R"({
        "dataset": {"kind": "spiral", "n_samples": 300, "n_classes": 3, "noise": 0.1},
        "model": {"hidden_sizes": [16, 8], "activation": "tanh"},
        "optimizer": {"kind": "lamb", "weight_decay": 0.01},
        "scheduler": {"kind": "autowu", "rho_w": 0.3, "decay_shape": "constant_then_cosine",
                      "detector": {"patience": 2, "grid_size": 100}},
        "batch_size": 30, "epochs": 4, "seed": 7
    })");
    EXPECT_EQ(cfg.dataset.kind, train::DatasetKind::spiral);
    EXPECT_EQ(cfg.dataset.n_samples, 300u);
    EXPECT_EQ(cfg.model.hidden_sizes, (std::vector<std::size_t>{16, 8}));
    EXPECT_EQ(cfg.model.activation, train::Activation::tanh);
    EXPECT_EQ(cfg.optimizer.kind, optim::OptimizerKind::lamb);
    EXPECT_EQ(cfg.optimizer.weight_decay, 0.01);
    EXPECT_EQ(cfg.optimizer.beta1, optim::OptimizerConfig::defaults(optim::OptimizerKind::lamb).beta1);
    const auto& a = std::get<AutoWUConfig>(cfg.scheduler);
    EXPECT_EQ(a.rho_w, 0.3);
    EXPECT_EQ(a.decay_shape, DecayShape::constant_then_cosine);
    EXPECT_EQ(a.detector.patience, 2u);
    EXPECT_EQ(a.detector.grid_size, 100u);
    EXPECT_EQ(cfg.seed, 7u);
}

TEST(ParseExperimentConfig, OtherSchedulers) {
    auto cfg = parse_experiment_config(R"({"scheduler": {"kind": "fixed", "lr": 0.03}})");
    EXPECT_EQ(std::get<train::FixedLR>(cfg.scheduler).lr, 0.03);
    cfg = parse_experiment_config(
        R"({"epochs": 20, "scheduler": {"kind": "baseline", "warmup_epochs": 5, "peak_lr": 0.2}})");
    const auto& b = std::get<BaselineConfig>(cfg.scheduler);
    EXPECT_EQ(b.warmup_epochs, 5u);
    EXPECT_EQ(b.peak_lr(), 0.2);
}

TEST(ParseExperimentConfig, NamesTheOffendingField) {
    EXPECT_EQ(field_of(R"({"scheduler": {"rho_w": 1.5}})"), "scheduler.rho_w");
    EXPECT_EQ(field_of(R"({"scheduler": {"eta_min": 2.0}})"), "scheduler.eta_max");
    EXPECT_EQ(field_of(R"({"scheduler": {"detector": {"confidence": 1.0}}})"), "scheduler.detector.confidence");
    EXPECT_EQ(field_of(R"({"scheduler": {"detector": {"n_test": 0}}})"), "scheduler.detector.n_test");
    EXPECT_EQ(field_of(R"({"scheduler": {"kind": "step"}})"), "scheduler.kind");
    EXPECT_EQ(field_of(R"({"batch_size": -4})"), "batch_size");
    EXPECT_EQ(field_of(R"({"batch_size": 2.5})"), "batch_size");
    EXPECT_EQ(field_of(R"({"optimizer": {"kind": "rmsprop"}})"), "optimizer.kind");
    EXPECT_EQ(field_of(R"({"dataset": {"noise": "high"}})"), "dataset.noise");
    EXPECT_EQ(field_of(R"({"model": {"hidden_sizes": [0]}})"), "model.hidden_sizes");
    EXPECT_EQ(field_of(R"({"log": {"record_timing": 1}})"), "log.record_timing");
}

TEST(ParseExperimentConfig, RejectsUnknownKeys) {
    EXPECT_EQ(field_of(R"({"epoch": 3})"), "epoch");
    EXPECT_EQ(field_of(R"({"scheduler": {"detector": {"patinece": 3}}})"), "scheduler.detector.patinece");
    EXPECT_EQ(field_of(R"({"scheduler": {"kind": "fixed", "rho_w": 0.5}})"), "scheduler.rho_w");
}

TEST(ParseExperimentConfig, RejectsMalformedJson) {
    EXPECT_EQ(field_of("{\"epochs\": "), "<root>");
    EXPECT_EQ(field_of("[1, 2]"), "<root>");
}

TEST(ParseExperimentConfig, CrossFieldChecks) {
    EXPECT_FALSE(field_of(R"({"dataset": {"n_samples": 10}, "batch_size": 64})").empty());
    EXPECT_FALSE(field_of(R"({"epochs": 2, "scheduler": {"kind": "baseline", "warmup_epochs": 5}})").empty());
}

TEST(ToJson, RoundTrips) {
    const auto cfg = parse_experiment_config(R"({
        "dataset": {"kind": "two_moons", "n_samples": 500, "noise": 0.2, "seed": 4},
        "model": {"hidden_sizes": [12]},
        "optimizer": {"kind": "sgd", "momentum": 0.5},
        "scheduler": {"kind": "autowu", "eta_max": 0.5, "warmup_growth": "linear"},
        "batch_size": 50, "epochs": 3, "log": {"record_timing": true}
    })");
    const auto text = to_json(cfg);
    const auto again = parse_experiment_config(text);
    EXPECT_EQ(to_json(again), text);
    EXPECT_EQ(again.optimizer.momentum, 0.5);
    EXPECT_TRUE(again.record_timing);
    EXPECT_EQ(std::get<AutoWUConfig>(again.scheduler).warmup_growth, WarmupGrowth::linear);

    for (const char* s : {R"({"scheduler": {"kind": "fixed", "lr": 0.1}})",
                          R"({"epochs": 20, "scheduler": {"kind": "baseline", "peak_lr": 0.1}})",
                          R"({"epochs": 20, "scheduler": {"kind": "baseline"}})"}) {
        const auto t = to_json(parse_experiment_config(s));
        EXPECT_EQ(to_json(parse_experiment_config(t)), t);
    }
}

TEST(ToJson, SortedKeys) {
    const auto text = to_json(parse_experiment_config("{}"));
    EXPECT_LT(text.find("\"batch_size\""), text.find("\"dataset\""));
    EXPECT_LT(text.find("\"dataset\""), text.find("\"epochs\""));
    EXPECT_LT(text.find("\"scheduler\""), text.rfind("\"seed\""));
}

TEST(DetectorConfigIo, RoundTrip) {
    const auto cfg = parse_detector_config(R"({"patience": 5, "confidence": 0.9})");
    EXPECT_EQ(cfg.patience, 5u);
    EXPECT_EQ(cfg.confidence, 0.9);
    EXPECT_EQ(to_json(parse_detector_config(to_json(cfg))), to_json(cfg));
    EXPECT_THROW(parse_detector_config(R"({"grid_size": 1})"), ConfigInvalid);
}

TEST(TrajectorySpecIo, RoundTrip) {
    const auto spec = parse_trajectory_spec(R"({"shape": "v_shape", "length": 400, "noise_rel": 0.03})");
    EXPECT_EQ(spec.shape, synthgen::TrajectoryShape::v_shape);
    EXPECT_EQ(spec.length, 400u);
    EXPECT_EQ(to_json(parse_trajectory_spec(to_json(spec))), to_json(spec));
    EXPECT_THROW(parse_trajectory_spec(R"({"shape": "zigzag"})"), ConfigInvalid);
}

} // namespace
} // namespace autowu
