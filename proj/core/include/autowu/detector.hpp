#pragma once

#include "autowu/gp.hpp"
#include "autowu/numerics.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace autowu {

struct LossEntry {
    std::size_t step = 0;
    double loss = 0.0;
};

// Per-step losses recorded during warmup. Steps are contiguous from 0.
class LossTrajectory {
public:
    // Throws NonFiniteLoss or NonContiguousStep.
    void record(std::size_t step, double loss);

    std::span<const LossEntry> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t last_step() const;
    void reserve(std::size_t n) { entries_.reserve(n); }

private:
    std::vector<LossEntry> entries_;
};

struct DetectorConfig {
    std::size_t n_test = 5;
    double confidence = 0.95;
    std::size_t patience = 3;
    std::size_t fit_subsample_max = 100;
    std::size_t infer_subsample_max = 500;
    std::size_t grid_size = gp::kDefaultGridSize;

    void validate() const;
};

struct TestOutcome {
    // Last recorded step when the test ran; x = 1 corresponds to it.
    std::size_t step = 0;
    std::vector<double> p_min_values;
    std::vector<double> argmins;
    bool detected = false;
    // The GP fit failed; the epoch counts as "not detected" and the per-
    // inference vectors are empty.
    bool fit_diverged = false;
    gp::GPParams params;
};

struct DetectorDecision {
    bool switch_now = false;
    std::optional<std::size_t> t_star;
    std::size_t patience_flag = 0;
};

// Subsamples C0 (fit) and C1..C_n (inference), fits the GP on C0 and
// evaluates the minimum probability and posterior argmin on each C_i.
// Positions are normalized as step / last_step.
TestOutcome epoch_test(const LossTrajectory& traj, const DetectorConfig& cfg, Rng& rng);

DetectorDecision update_patience(std::size_t prev_flag, const TestOutcome& outcome, const DetectorConfig& cfg,
                                 std::size_t current_step);

// round(current_step * mean(argmins)), clamped to [0, current_step].
std::size_t compute_t_star(const TestOutcome& outcome, std::size_t current_step);

// Builds observations for the given (sorted) entry indices.
gp::NormalizedObservations normalize(const LossTrajectory& traj, std::span<const std::size_t> indices);

} // namespace autowu
