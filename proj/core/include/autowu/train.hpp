#pragma once

#include "autowu/error.hpp"
#include "autowu/experiment_log.hpp"
#include "autowu/numerics.hpp"
#include "autowu/optim.hpp"
#include "autowu/schedule.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace autowu::train {

enum class DatasetKind { gaussian_blobs, two_moons, spiral };
enum class ModelKind { logistic_regression, mlp };
enum class Activation { relu, tanh };

std::string_view to_string(DatasetKind kind);
std::string_view to_string(ModelKind kind);
std::string_view to_string(Activation act);
DatasetKind dataset_kind_from_string(std::string_view name);
ModelKind model_kind_from_string(std::string_view name);
Activation activation_from_string(std::string_view name);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::gaussian_blobs;
    std::size_t n_samples = 1024;
    std::size_t n_features = 2;
    std::size_t n_classes = 2;
    // Per-coordinate standard deviation of the Gaussian perturbation.
    double noise = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    Matrix features;
    std::vector<std::size_t> labels;
    std::size_t n_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t n_features() const noexcept { return features.cols(); }
};

// Deterministic in spec.seed. Labels cycle through the classes, so every
// class has floor or ceil of n_samples / n_classes members.
Dataset make_dataset(const DatasetSpec& spec);

struct ModelSpec {
    ModelKind kind = ModelKind::mlp;
    std::vector<std::size_t> hidden_sizes{32};
    Activation activation = Activation::relu;
    std::uint64_t seed = 0;
};

// Fully connected network; logistic regression is the zero-hidden-layer case.
// Weights are drawn uniform in +-sqrt(6 / (fan_in + fan_out)), biases start
// at zero. Parameters are grouped per tensor as "layer<i>.weight" and
// "layer<i>.bias".
class Model {
public:
    Model(const ModelSpec& spec, std::size_t n_features, std::size_t n_classes);

    std::vector<optim::ParamGroup>& params() noexcept { return params_; }
    const std::vector<optim::ParamGroup>& params() const noexcept { return params_; }
    std::span<const std::size_t> layer_sizes() const noexcept { return sizes_; }
    Activation activation() const noexcept { return activation_; }
    std::size_t parameter_count() const;
    std::size_t n_layers() const noexcept { return sizes_.size() - 1; }

private:
    std::vector<std::size_t> sizes_;
    Activation activation_;
    std::vector<optim::ParamGroup> params_;
};

struct LossAndGrad {
    double loss = 0.0;
    // Aligned with Model::params().
    std::vector<std::vector<double>> grads;
};

// Mean cross-entropy over the batch rows and its exact gradient. Throws
// NonFiniteLoss when the loss is not finite.
LossAndGrad forward_backward(const Model& model, const Dataset& data, std::span<const std::size_t> batch);

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

Evaluation evaluate(const Model& model, const Dataset& data);

struct FixedLR {
    double lr = 0.01;
};

using SchedulerSpec = std::variant<AutoWUConfig, BaselineConfig, FixedLR>;

struct ExperimentConfig {
    DatasetSpec dataset;
    ModelSpec model;
    optim::OptimizerConfig optimizer = optim::OptimizerConfig::defaults(optim::OptimizerKind::adamp);
    SchedulerSpec scheduler = AutoWUConfig{};
    std::size_t batch_size = 64;
    std::size_t epochs = 10;
    // Drives minibatch shuffling and the detector's subsampling.
    std::uint64_t seed = 0;
    // Write measured GP test times into epochs.csv. Off by default so reruns
    // give byte-identical CSV files; timings always go to meta.json.
    bool record_timing = false;

    std::size_t steps_per_epoch() const;
    std::size_t total_steps() const;
    void validate() const;
};

// Thrown by run_experiment when a minibatch loss stops being finite. Carries
// the log up to and including the failing step.
class RunAborted : public NonFiniteLoss {
public:
    RunAborted(const std::string& what, ExperimentLog partial)
        : NonFiniteLoss(what), partial_(std::move(partial)) {}

    const ExperimentLog& partial_log() const noexcept { return partial_; }

private:
    ExperimentLog partial_;
};

ExperimentLog run_experiment(const ExperimentConfig& cfg);

} // namespace autowu::train
