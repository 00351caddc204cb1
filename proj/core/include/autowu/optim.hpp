#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace autowu::optim {

enum class OptimizerKind { sgd, adam, adamp, lamb };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    // AdamP projection threshold; the test is |cos(w, g)| < delta / sqrt(dim).
    double delta = 0.1;
    // SGD only.
    double momentum = 0.0;
    // LAMB trust ratio is clipped to [0, trust_clip].
    double trust_clip = 10.0;

    // Defaults per optimizer: eps 1e-6 for LAMB, weight decay 0.1 for AdamP
    // and LAMB, 0 otherwise.
    static OptimizerConfig defaults(OptimizerKind kind);

    void validate() const;
};

// One parameter tensor (flattened) with its optimizer state. For SGD the
// first moment doubles as the momentum buffer.
struct ParamGroup {
    ParamGroup() = default;
    ParamGroup(std::vector<double> initial, std::string id, bool projectable = true);

    std::vector<double> values;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t step_count = 0;
    // Scope of LAMB's norms and of AdamP's cosine test.
    std::string layer_id;
    // AdamP only projects groups flagged here (weight matrices); bias
    // vectors keep the plain Adam update.
    bool projectable = true;

    std::size_t size() const noexcept { return values.size(); }
};

void sgd_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg);
void adam_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg);
void adamp_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg);
void lamb_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg);

// Dispatches on cfg.kind.
void optimizer_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg);

// Removes the component of `direction` along `weights`. No-op when
// ||weights|| < 1e-12.
void project_tangent(std::span<double> direction, std::span<const double> weights);

// True when AdamP would project this update: |cos(w, g)| < delta / sqrt(dim).
bool adamp_projection_engaged(std::span<const double> weights, std::span<const double> grad, double delta);

} // namespace autowu::optim
