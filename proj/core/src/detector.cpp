#include "autowu/detector.hpp"

#include "autowu/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace autowu {

void LossTrajectory::record(std::size_t step, double loss) {
    if (!std::isfinite(loss)) {
        throw NonFiniteLoss("non-finite loss at step " + std::to_string(step));
    }
    const std::size_t expected = entries_.empty() ? 0 : entries_.back().step + 1;
    if (step != expected) {
        throw NonContiguousStep("expected step " + std::to_string(expected) + ", got " + std::to_string(step));
    }
    entries_.push_back({step, loss});
}

std::size_t LossTrajectory::last_step() const {
    if (entries_.empty()) {
        throw PreconditionError("LossTrajectory::last_step on empty trajectory");
    }
    return entries_.back().step;
}

void DetectorConfig::validate() const {
    if (n_test < 1) throw InvalidSpec("detector.n_test must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidSpec("detector.confidence must be in (0, 1)");
    if (patience < 1) throw InvalidSpec("detector.patience must be >= 1");
    if (fit_subsample_max < 2) throw InvalidSpec("detector.fit_subsample_max must be >= 2");
    if (infer_subsample_max < 1) throw InvalidSpec("detector.infer_subsample_max must be >= 1");
    if (grid_size < 2) throw InvalidSpec("detector.grid_size must be >= 2");
}

gp::NormalizedObservations normalize(const LossTrajectory& traj, std::span<const std::size_t> indices) {
    const auto entries = traj.entries();
    const auto t = static_cast<double>(traj.last_step());
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(indices.size());
    ys.reserve(indices.size());
    for (std::size_t idx : indices) {
        xs.push_back(static_cast<double>(entries[idx].step) / t);
        ys.push_back(entries[idx].loss);
    }
    return {std::move(xs), std::move(ys)};
}

TestOutcome epoch_test(const LossTrajectory& traj, const DetectorConfig& cfg, Rng& rng) {
    if (traj.size() < 2) {
        throw PreconditionError("epoch_test: need at least 2 recorded steps");
    }
    const std::size_t n = traj.size();
    TestOutcome outcome;
    outcome.step = traj.last_step();

    const auto fit_idx = sample_without_replacement(rng, n, std::min(n, cfg.fit_subsample_max));
    std::vector<std::vector<std::size_t>> infer_idx;
    infer_idx.reserve(cfg.n_test);
    for (std::size_t i = 0; i < cfg.n_test; ++i) {
        infer_idx.push_back(sample_without_replacement(rng, n, std::min(n, cfg.infer_subsample_max)));
    }

    try {
        outcome.params = gp::fit(normalize(traj, fit_idx));
    } catch (const FitDiverged&) {
        outcome.fit_diverged = true;
        return outcome;
    }

    // Identical subsets (always the case once |C| <= infer_subsample_max)
    // give identical posteriors; reuse the previous one.
    const std::vector<std::size_t>* prev_subset = nullptr;
    double prev_p = 0.0;
    double prev_argmin = 0.0;
    std::size_t positives = 0;
    for (const auto& subset : infer_idx) {
        if (prev_subset == nullptr || *prev_subset != subset) {
            const auto contrast = gp::endpoint_contrast(normalize(traj, subset), outcome.params, cfg.grid_size);
            prev_p = gp::p_min(contrast);
            prev_argmin = gp::argmin_mean(contrast);
            prev_subset = &subset;
        }
        outcome.p_min_values.push_back(prev_p);
        outcome.argmins.push_back(prev_argmin);
        if (prev_p > cfg.confidence) {
            ++positives;
        }
    }
    outcome.detected = 2 * positives > cfg.n_test;
    return outcome;
}

std::size_t compute_t_star(const TestOutcome& outcome, std::size_t current_step) {
    if (outcome.argmins.empty()) {
        throw PreconditionError("compute_t_star: outcome has no argmins");
    }
    const double mean = std::accumulate(outcome.argmins.begin(), outcome.argmins.end(), 0.0) /
                        static_cast<double>(outcome.argmins.size());
    const double raw = std::round(static_cast<double>(current_step) * mean);
    return static_cast<std::size_t>(std::clamp(raw, 0.0, static_cast<double>(current_step)));
}

DetectorDecision update_patience(std::size_t prev_flag, const TestOutcome& outcome, const DetectorConfig& cfg,
                                 std::size_t current_step) {
    DetectorDecision decision;
    decision.patience_flag = outcome.detected ? prev_flag + 1 : 0;
    if (decision.patience_flag >= cfg.patience) {
        decision.switch_now = true;
        decision.t_star = compute_t_star(outcome, current_step);
    }
    return decision;
}

} // namespace autowu
