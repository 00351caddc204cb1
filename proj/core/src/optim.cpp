#include "autowu/optim.hpp"

#include "autowu/error.hpp"
#include "autowu/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace autowu::optim {

std::string_view to_string(OptimizerKind kind) {
    switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adamp: return "adamp";
    case OptimizerKind::lamb: return "lamb";
    }
    return "unknown";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    if (name == "adamp") return OptimizerKind::adamp;
    if (name == "lamb") return OptimizerKind::lamb;
    throw InvalidSpec("unknown optimizer kind '" + std::string(name) + "'");
}

OptimizerConfig OptimizerConfig::defaults(OptimizerKind kind) {
    OptimizerConfig cfg;
    cfg.kind = kind;
    switch (kind) {
    case OptimizerKind::adamp:
        cfg.weight_decay = 0.1;
        break;
    case OptimizerKind::lamb:
        cfg.weight_decay = 0.1;
        cfg.eps = 1e-6;
        break;
    case OptimizerKind::sgd:
    case OptimizerKind::adam:
        break;
    }
    return cfg;
}

void OptimizerConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidSpec("optimizer.beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidSpec("optimizer.beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw InvalidSpec("optimizer.eps must be positive");
    if (!(weight_decay >= 0.0)) throw InvalidSpec("optimizer.weight_decay must be non-negative");
    if (!(delta > 0.0)) throw InvalidSpec("optimizer.delta must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidSpec("optimizer.momentum must be in [0, 1)");
    if (!(trust_clip > 0.0)) throw InvalidSpec("optimizer.trust_clip must be positive");
}

ParamGroup::ParamGroup(std::vector<double> initial, std::string id, bool projectable_)
    : values(std::move(initial)),
      first_moment(values.size(), 0.0),
      second_moment(values.size(), 0.0),
      layer_id(std::move(id)),
      projectable(projectable_) {}

namespace {

void check_shapes(const ParamGroup& group, std::span<const double> grad) {
    if (grad.size() != group.values.size() || group.first_moment.size() != group.values.size() ||
        group.second_moment.size() != group.values.size()) {
        throw ShapeMismatch("optimizer step on '" + group.layer_id + "': expected " +
                            std::to_string(group.values.size()) + " values, got gradient of " +
                            std::to_string(grad.size()));
    }
}

void apply_decoupled_decay(ParamGroup& group, double lr, double weight_decay) {
    if (weight_decay == 0.0) {
        return;
    }
    const double shrink = 1.0 - lr * weight_decay;
    for (double& w : group.values) {
        w *= shrink;
    }
}

// Advances the moments and returns the bias-corrected Adam direction
// m_hat / (sqrt(v_hat) + eps).
std::vector<double> adam_direction(ParamGroup& group, std::span<const double> grad, const OptimizerConfig& cfg) {
    ++group.step_count;
    const auto t = static_cast<double>(group.step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    std::vector<double> direction(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double g = grad[i];
        double& m = group.first_moment[i];
        double& v = group.second_moment[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        direction[i] = m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
    return direction;
}

} // namespace

void sgd_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg) {
    check_shapes(group, grad);
    apply_decoupled_decay(group, lr, cfg.weight_decay);
    ++group.step_count;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        double& buf = group.first_moment[i];
        buf = cfg.momentum * buf + grad[i];
        group.values[i] -= lr * buf;
    }
}

void adam_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg) {
    check_shapes(group, grad);
    const auto direction = adam_direction(group, grad, cfg);
    apply_decoupled_decay(group, lr, cfg.weight_decay);
    for (std::size_t i = 0; i < direction.size(); ++i) {
        group.values[i] -= lr * direction[i];
    }
}

bool adamp_projection_engaged(std::span<const double> weights, std::span<const double> grad, double delta) {
    const double wn = norm2(weights);
    const double gn = norm2(grad);
    if (wn < 1e-12 || gn == 0.0) {
        return false;
    }
    const double cosine = dot(weights, grad) / (wn * gn);
    return std::abs(cosine) < delta / std::sqrt(static_cast<double>(weights.size()));
}

void project_tangent(std::span<double> direction, std::span<const double> weights) {
    const double wn = norm2(weights);
    if (wn < 1e-12) {
        return;
    }
    const double radial = dot(direction, weights) / (wn * wn);
    for (std::size_t i = 0; i < direction.size(); ++i) {
        direction[i] -= radial * weights[i];
    }
}

void adamp_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg) {
    check_shapes(group, grad);
    const bool project = group.projectable && adamp_projection_engaged(group.values, grad, cfg.delta);
    auto direction = adam_direction(group, grad, cfg);
    if (project) {
        project_tangent(direction, group.values);
    }
    apply_decoupled_decay(group, lr, cfg.weight_decay);
    for (std::size_t i = 0; i < direction.size(); ++i) {
        group.values[i] -= lr * direction[i];
    }
}

void lamb_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg) {
    check_shapes(group, grad);
    auto update = adam_direction(group, grad, cfg);
    for (std::size_t i = 0; i < update.size(); ++i) {
        update[i] += cfg.weight_decay * group.values[i];
    }
    const double wn = norm2(group.values);
    const double un = norm2(update);
    double trust = 1.0;
    if (wn > 0.0 && un > 0.0) {
        trust = std::clamp(wn / un, 0.0, cfg.trust_clip);
    }
    for (std::size_t i = 0; i < update.size(); ++i) {
        group.values[i] -= lr * trust * update[i];
    }
}

void optimizer_step(ParamGroup& group, std::span<const double> grad, double lr, const OptimizerConfig& cfg) {
    switch (cfg.kind) {
    case OptimizerKind::sgd: return sgd_step(group, grad, lr, cfg);
    case OptimizerKind::adam: return adam_step(group, grad, lr, cfg);
    case OptimizerKind::adamp: return adamp_step(group, grad, lr, cfg);
    case OptimizerKind::lamb: return lamb_step(group, grad, lr, cfg);
    }
}

} // namespace autowu::optim
