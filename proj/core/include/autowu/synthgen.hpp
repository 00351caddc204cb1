#pragma once

#include "autowu/detector.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace autowu::synthgen {

enum class TrajectoryShape { monotone_decay, v_shape, plateau, spiky_decay };

std::string_view to_string(TrajectoryShape shape);
TrajectoryShape trajectory_shape_from_string(std::string_view name);

// Base curves over steps t = 0..length-1, before noise:
//   monotone_decay  1 + 2 exp(-3 t / length)
//   v_shape         1 + 16 ((t - t_min) / length)^2, t_min = round(min_fraction * length)
//   plateau         1 + 2 (1 - t / t_p)^2 for t < t_p = round(min_fraction * length), then 1
//   spiky_decay     monotone_decay, each step scaled by (1 + spike_magnitude)
//                   with probability spike_prob
// Noise is multiplicative: loss = base * (1 + noise_rel * N(0, 1)).
struct TrajectorySpec {
    TrajectoryShape shape = TrajectoryShape::monotone_decay;
    std::size_t length = 200;
    double min_fraction = 0.5;
    double noise_rel = 0.0;
    double spike_prob = 0.0;
    double spike_magnitude = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    // Step of the true minimum for shapes that have one past which the loss
    // rises (v_shape only).
    std::optional<std::size_t> true_min_step() const;
    // Shapes that keep decreasing; any switch on them is a false positive.
    bool is_monotone() const;
};

std::vector<double> base_curve(const TrajectorySpec& spec);
LossTrajectory gen_trajectory(const TrajectorySpec& spec);

struct SeedRecord {
    std::size_t spec_index = 0;
    TrajectoryShape shape = TrajectoryShape::monotone_decay;
    std::uint64_t seed = 0;
    std::size_t tests_run = 0;
    std::optional<std::size_t> switch_epoch;
    std::optional<std::size_t> switch_step;
    std::optional<std::size_t> t_star;
    std::optional<std::size_t> true_min_step;
    std::size_t epoch_len = 1;

    bool switched() const { return switch_step.has_value(); }
    // A switch at or after the true minimum.
    bool detected() const;
    std::optional<double> t_star_error() const;
    std::optional<std::size_t> latency_epochs() const;
};

struct DetectionReport {
    std::vector<SeedRecord> records;
    std::size_t with_minimum = 0;
    std::size_t monotone = 0;
    std::size_t detections = 0;
    std::size_t false_positives = 0;
    double detection_rate = 0.0;
    double false_positive_rate = 0.0;
    // Means over detected records; empty when nothing was detected.
    std::optional<double> mean_t_star_error;
    std::optional<double> mean_latency_epochs;

    static DetectionReport aggregate(std::vector<SeedRecord> records);
};

// Feeds one trajectory step by step, testing every epoch_len steps, until
// the patience rule fires or the trajectory ends.
SeedRecord evaluate_one(const TrajectorySpec& spec, const DetectorConfig& cfg, std::size_t epoch_len);

// Every (spec, seed) pair; each spec's own seed is replaced by the seed.
DetectionReport evaluate_detector(std::span<const TrajectorySpec> specs, const DetectorConfig& cfg,
                                  std::size_t epoch_len, std::span<const std::uint64_t> seeds);

// spec_index,shape,seed,tests_run,switched,switch_epoch,switch_step,t_star,true_min_step,detected,t_star_error
std::string report_csv(const DetectionReport& report);
std::string report_summary_json(const DetectionReport& report);

} // namespace autowu::synthgen
