#pragma once

#include "autowu/detector.hpp"
#include "autowu/numerics.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace autowu {

enum class DecayShape { cosine, constant_then_cosine };
enum class WarmupGrowth { exponential, linear };
enum class Phase { warmup, decay };

std::string_view to_string(DecayShape shape);
std::string_view to_string(WarmupGrowth growth);
std::string_view to_string(Phase phase);
DecayShape decay_shape_from_string(std::string_view name);
WarmupGrowth warmup_growth_from_string(std::string_view name);

struct AutoWUConfig {
    double eta_min = 1e-5;
    double eta_max = 1.0;
    // Maximum fraction of total steps spent warming up.
    double rho_w = 0.5;
    std::size_t total_steps = 0;
    DecayShape decay_shape = DecayShape::cosine;
    // Length of the cosine tail of constant_then_cosine, as a fraction of T.
    double tail_fraction = 0.2;
    DetectorConfig detector;
    WarmupGrowth warmup_growth = WarmupGrowth::exponential;

    // floor(rho_w * T)
    std::size_t warmup_cap() const;
    // (eta_max / eta_min)^(1 / warmup_cap)
    double gamma() const;
    void validate() const;
};

struct SchedulerState {
    Phase phase = Phase::warmup;
    std::size_t step = 0;
    double lr = 0.0;
    std::optional<std::size_t> switch_step;
    std::optional<double> decay_start_lr;
    std::optional<std::size_t> t_star;
    bool forced_switch = false;
    std::size_t patience_flag = 0;
    LossTrajectory trajectory;
    std::optional<TestOutcome> last_outcome;

    static SchedulerState initial(const AutoWUConfig& cfg);
};

// eta_min * gamma^t in closed form.
double warmup_lr(std::size_t t, const AutoWUConfig& cfg);
// eta_min + (eta_max - eta_min) * t / cap.
double linear_warmup_lr(std::size_t t, const AutoWUConfig& cfg);
// Dispatches on cfg.warmup_growth.
double growth_lr(std::size_t t, const AutoWUConfig& cfg);

// Decay-phase LR at step t given the switch step and start LR in `state`.
double decay_lr(std::size_t t, const SchedulerState& state, const AutoWUConfig& cfg);

struct StepEvent {
    double next_lr = 0.0;
    // Present on epoch boundaries during warmup.
    std::optional<TestOutcome> outcome;
    std::optional<DetectorDecision> decision;
    bool switched = false;
    double gp_test_ms = 0.0;
};

// Consumes the loss observed at state.step (trained with state.lr) and
// advances to the next step. Throws StepBeyondTotal once T steps are done.
StepEvent step(SchedulerState& state, double loss, bool epoch_end, const AutoWUConfig& cfg, Rng& rng);

// Owns config, state and the detector's random stream.
class AutoWUScheduler {
public:
    AutoWUScheduler(AutoWUConfig cfg, std::uint64_t seed);

    double current_lr() const noexcept { return state_.lr; }
    const SchedulerState& state() const noexcept { return state_; }
    const AutoWUConfig& config() const noexcept { return cfg_; }

    StepEvent step(double loss, bool epoch_end);

private:
    AutoWUConfig cfg_;
    SchedulerState state_;
    Rng rng_;
};

// Linear warmup from 0 to the peak, then cosine to 0 at T.
struct BaselineConfig {
    double eta_base = 0.001;
    std::size_t batch_size = 256;
    std::size_t reference_batch = 256;
    std::size_t warmup_epochs = 5;
    std::size_t total_steps = 0;
    std::size_t steps_per_epoch = 0;
    // Explicit peak LR (grid sweeps); otherwise eta_base * sqrt(B / reference).
    std::optional<double> peak_override;

    double peak_lr() const;
    std::size_t warmup_steps() const;
    void validate() const;
};

double baseline_lr(std::size_t t, const BaselineConfig& cfg);

// Cartesian product (peak-major) of peak LRs and warmup epoch counts.
std::vector<BaselineConfig> sweep_grid(const BaselineConfig& base, std::span<const double> peaks,
                                       std::span<const std::size_t> warmup_epochs);

} // namespace autowu
