#include "autowu/schedule.hpp"

#include "autowu/error.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

namespace autowu {

std::string_view to_string(DecayShape shape) {
    return shape == DecayShape::cosine ? "cosine" : "constant_then_cosine";
}

std::string_view to_string(WarmupGrowth growth) {
    return growth == WarmupGrowth::exponential ? "exponential" : "linear";
}

std::string_view to_string(Phase phase) {
    return phase == Phase::warmup ? "warmup" : "decay";
}

DecayShape decay_shape_from_string(std::string_view name) {
    if (name == "cosine") return DecayShape::cosine;
    if (name == "constant_then_cosine") return DecayShape::constant_then_cosine;
    throw InvalidSpec("unknown decay shape '" + std::string(name) + "'");
}

WarmupGrowth warmup_growth_from_string(std::string_view name) {
    if (name == "exponential") return WarmupGrowth::exponential;
    if (name == "linear") return WarmupGrowth::linear;
    throw InvalidSpec("unknown warmup growth '" + std::string(name) + "'");
}

std::size_t AutoWUConfig::warmup_cap() const {
    return static_cast<std::size_t>(std::floor(rho_w * static_cast<double>(total_steps)));
}

double AutoWUConfig::gamma() const {
    return std::pow(eta_max / eta_min, 1.0 / static_cast<double>(warmup_cap()));
}

void AutoWUConfig::validate() const {
    if (!(eta_min > 0.0)) throw InvalidSpec("scheduler.eta_min must be positive");
    if (!(eta_max > eta_min)) throw InvalidSpec("scheduler.eta_max must exceed eta_min");
    if (!(rho_w > 0.0 && rho_w < 1.0)) throw InvalidSpec("scheduler.rho_w must be in (0, 1)");
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
        throw InvalidSpec("scheduler.tail_fraction must be in (0, 1)");
    }
    if (warmup_cap() < 1) throw InvalidSpec("scheduler: floor(rho_w * total_steps) must be >= 1");
    detector.validate();
}

SchedulerState SchedulerState::initial(const AutoWUConfig& cfg) {
    SchedulerState s;
    s.lr = growth_lr(0, cfg);
    s.trajectory.reserve(cfg.warmup_cap() + 1);
    return s;
}

double warmup_lr(std::size_t t, const AutoWUConfig& cfg) {
    const std::size_t cap = cfg.warmup_cap();
    if (t > cap) {
        throw PreconditionError("warmup_lr: step " + std::to_string(t) + " beyond warmup cap " + std::to_string(cap));
    }
    const double frac = static_cast<double>(t) / static_cast<double>(cap);
    return cfg.eta_min * std::exp(frac * std::log(cfg.eta_max / cfg.eta_min));
}

double linear_warmup_lr(std::size_t t, const AutoWUConfig& cfg) {
    const std::size_t cap = cfg.warmup_cap();
    if (t > cap) {
        throw PreconditionError("linear_warmup_lr: step beyond warmup cap");
    }
    return cfg.eta_min + (cfg.eta_max - cfg.eta_min) * static_cast<double>(t) / static_cast<double>(cap);
}

double growth_lr(std::size_t t, const AutoWUConfig& cfg) {
    return cfg.warmup_growth == WarmupGrowth::exponential ? warmup_lr(t, cfg) : linear_warmup_lr(t, cfg);
}

namespace {

double cosine_from(double start_lr, std::size_t begin, std::size_t end, std::size_t t) {
    if (t >= end) {
        return 0.0;
    }
    const double frac = static_cast<double>(t - begin) / static_cast<double>(end - begin);
    return start_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

} // namespace

double decay_lr(std::size_t t, const SchedulerState& state, const AutoWUConfig& cfg) {
    if (!state.switch_step || !state.decay_start_lr) {
        throw PreconditionError("decay_lr: scheduler has not switched to decay");
    }
    const std::size_t s = *state.switch_step;
    const double eta0 = *state.decay_start_lr;
    const std::size_t total = cfg.total_steps;
    if (t < s) {
        throw PreconditionError("decay_lr: step precedes the switch step");
    }
    if (cfg.decay_shape == DecayShape::cosine) {
        return cosine_from(eta0, s, total, t);
    }
    const auto tail = static_cast<std::size_t>(std::ceil(cfg.tail_fraction * static_cast<double>(total) - 1e-9));
    const std::size_t tail_begin = std::max(s, total - std::min(tail, total));
    if (t < tail_begin) {
        return eta0;
    }
    return cosine_from(eta0, tail_begin, total, t);
}

namespace {

void enter_decay(SchedulerState& state, std::size_t t_star, bool forced, const AutoWUConfig& cfg) {
    state.phase = Phase::decay;
    state.switch_step = state.step + 1;
    state.t_star = t_star;
    state.forced_switch = forced;
    state.decay_start_lr = growth_lr(t_star, cfg);
}

} // namespace

StepEvent step(SchedulerState& state, double loss, bool epoch_end, const AutoWUConfig& cfg, Rng& rng) {
    if (state.step >= cfg.total_steps) {
        throw StepBeyondTotal("scheduler step " + std::to_string(state.step) + " at or beyond total " +
                              std::to_string(cfg.total_steps));
    }
    StepEvent event;
    if (state.phase == Phase::warmup) {
        state.trajectory.record(state.step, loss);
        if (epoch_end && state.trajectory.size() >= 2) {
            const auto started = std::chrono::steady_clock::now();
            TestOutcome outcome = epoch_test(state.trajectory, cfg.detector, rng);
            event.gp_test_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
            const auto decision = update_patience(state.patience_flag, outcome, cfg.detector, state.step);
            state.patience_flag = decision.patience_flag;
            state.last_outcome = outcome;
            event.outcome = std::move(outcome);
            event.decision = decision;
            if (decision.switch_now) {
                enter_decay(state, *decision.t_star, false, cfg);
                event.switched = true;
            }
        }
        const std::size_t cap = cfg.warmup_cap();
        if (state.phase == Phase::warmup && state.step >= cap) {
            std::size_t t_star = cap;
            if (state.last_outcome && !state.last_outcome->fit_diverged) {
                t_star = compute_t_star(*state.last_outcome, state.last_outcome->step);
            }
            enter_decay(state, t_star, true, cfg);
            event.switched = true;
        }
    }
    const std::size_t next = state.step + 1;
    event.next_lr = state.phase == Phase::warmup ? growth_lr(next, cfg) : decay_lr(next, state, cfg);
    state.step = next;
    state.lr = event.next_lr;
    return event;
}

AutoWUScheduler::AutoWUScheduler(AutoWUConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.validate();
    state_ = SchedulerState::initial(cfg_);
}

StepEvent AutoWUScheduler::step(double loss, bool epoch_end) {
    return autowu::step(state_, loss, epoch_end, cfg_, rng_);
}

double BaselineConfig::peak_lr() const {
    if (peak_override) {
        return *peak_override;
    }
    return eta_base * std::sqrt(static_cast<double>(batch_size) / static_cast<double>(reference_batch));
}

std::size_t BaselineConfig::warmup_steps() const {
    return warmup_epochs * steps_per_epoch;
}

void BaselineConfig::validate() const {
    if (!(peak_lr() > 0.0)) throw InvalidSpec("baseline: peak LR must be positive");
    if (batch_size == 0 || reference_batch == 0) throw InvalidSpec("baseline: batch sizes must be positive");
    if (total_steps == 0) throw InvalidSpec("baseline: total_steps must be positive");
    if (warmup_steps() >= total_steps) {
        throw InvalidSpec("baseline: warmup (" + std::to_string(warmup_steps()) + " steps) must be shorter than " +
                          std::to_string(total_steps) + " total steps");
    }
}

double baseline_lr(std::size_t t, const BaselineConfig& cfg) {
    if (t > cfg.total_steps) {
        throw PreconditionError("baseline_lr: step beyond total steps");
    }
    const double peak = cfg.peak_lr();
    const std::size_t warmup = cfg.warmup_steps();
    if (t < warmup) {
        return peak * static_cast<double>(t) / static_cast<double>(warmup);
    }
    return cosine_from(peak, warmup, cfg.total_steps, t);
}

std::vector<BaselineConfig> sweep_grid(const BaselineConfig& base, std::span<const double> peaks,
                                       std::span<const std::size_t> warmup_epochs) {
    if (peaks.empty() || warmup_epochs.empty()) {
        throw PreconditionError("sweep_grid: peak and warmup lists must be non-empty");
    }
    std::vector<BaselineConfig> grid;
    grid.reserve(peaks.size() * warmup_epochs.size());
    for (double peak : peaks) {
        for (std::size_t wu : warmup_epochs) {
            BaselineConfig cfg = base;
            cfg.peak_override = peak;
            cfg.warmup_epochs = wu;
            grid.push_back(cfg);
        }
    }
    return grid;
}

} // namespace autowu
