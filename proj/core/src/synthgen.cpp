#include "autowu/synthgen.hpp"

#include "autowu/error.hpp"
#include "autowu/experiment_log.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <type_traits>

namespace autowu::synthgen {

std::string_view to_string(TrajectoryShape shape) {
    switch (shape) {
    case TrajectoryShape::monotone_decay: return "monotone_decay";
    case TrajectoryShape::v_shape: return "v_shape";
    case TrajectoryShape::plateau: return "plateau";
    case TrajectoryShape::spiky_decay: return "spiky_decay";
    }
    return "unknown";
}

TrajectoryShape trajectory_shape_from_string(std::string_view name) {
    if (name == "monotone_decay") return TrajectoryShape::monotone_decay;
    if (name == "v_shape") return TrajectoryShape::v_shape;
    if (name == "plateau") return TrajectoryShape::plateau;
    if (name == "spiky_decay") return TrajectoryShape::spiky_decay;
    throw InvalidSpec("unknown trajectory shape '" + std::string(name) + "'");
}

namespace {

constexpr double kFloor = 1.0;
constexpr double kDecayAmplitude = 2.0;
constexpr double kDecayRate = 3.0;
constexpr double kVCurvature = 16.0;

std::size_t vertex_step(const TrajectorySpec& spec) {
    return static_cast<std::size_t>(std::llround(spec.min_fraction * static_cast<double>(spec.length)));
}

} // namespace

void TrajectorySpec::validate() const {
    if (length < 2) throw InvalidSpec("trajectory.length must be >= 2");
    if (!(noise_rel >= 0.0)) throw InvalidSpec("trajectory.noise_rel must be non-negative");
    if (!(spike_prob >= 0.0 && spike_prob <= 1.0)) throw InvalidSpec("trajectory.spike_prob must be in [0, 1]");
    if (!(spike_magnitude >= 0.0)) throw InvalidSpec("trajectory.spike_magnitude must be non-negative");
    if (shape == TrajectoryShape::v_shape || shape == TrajectoryShape::plateau) {
        if (!(min_fraction > 0.0 && min_fraction < 1.0)) {
            throw InvalidSpec("trajectory.min_fraction must be in (0, 1)");
        }
        const std::size_t v = vertex_step(*this);
        if (v == 0 || v >= length) {
            throw InvalidSpec("trajectory.min_fraction puts the vertex outside the trajectory");
        }
    }
}

std::optional<std::size_t> TrajectorySpec::true_min_step() const {
    if (shape == TrajectoryShape::v_shape) {
        return vertex_step(*this);
    }
    return std::nullopt;
}

bool TrajectorySpec::is_monotone() const {
    return shape == TrajectoryShape::monotone_decay || shape == TrajectoryShape::spiky_decay;
}

std::vector<double> base_curve(const TrajectorySpec& spec) {
    spec.validate();
    const auto len = static_cast<double>(spec.length);
    std::vector<double> curve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        const auto x = static_cast<double>(t);
        switch (spec.shape) {
        case TrajectoryShape::monotone_decay:
        case TrajectoryShape::spiky_decay:
            curve[t] = kFloor + kDecayAmplitude * std::exp(-kDecayRate * x / len);
            break;
        case TrajectoryShape::v_shape: {
            const double d = (x - static_cast<double>(vertex_step(spec))) / len;
            curve[t] = kFloor + kVCurvature * d * d;
            break;
        }
        case TrajectoryShape::plateau: {
            const auto tp = static_cast<double>(vertex_step(spec));
            const double r = x < tp ? 1.0 - x / tp : 0.0;
            curve[t] = kFloor + kDecayAmplitude * r * r;
            break;
        }
        }
    }
    return curve;
}

LossTrajectory gen_trajectory(const TrajectorySpec& spec) {
    const auto curve = base_curve(spec);
    Rng rng(spec.seed);
    LossTrajectory traj;
    traj.reserve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        double loss = curve[t];
        if (spec.shape == TrajectoryShape::spiky_decay && rng.bernoulli(spec.spike_prob)) {
            loss *= 1.0 + spec.spike_magnitude;
        }
        if (spec.noise_rel > 0.0) {
            loss *= 1.0 + spec.noise_rel * rng.normal();
        }
        traj.record(t, loss);
    }
    return traj;
}

bool SeedRecord::detected() const {
    return switch_step && true_min_step && *switch_step >= *true_min_step;
}

std::optional<double> SeedRecord::t_star_error() const {
    if (!detected() || !t_star || *true_min_step == 0) {
        return std::nullopt;
    }
    return std::abs(static_cast<double>(*t_star) / static_cast<double>(*true_min_step) - 1.0);
}

std::optional<std::size_t> SeedRecord::latency_epochs() const {
    if (!detected()) {
        return std::nullopt;
    }
    return *switch_epoch - *true_min_step / epoch_len;
}

DetectionReport DetectionReport::aggregate(std::vector<SeedRecord> records) {
    DetectionReport r;
    r.records = std::move(records);
    double err_sum = 0.0;
    double lat_sum = 0.0;
    for (const auto& rec : r.records) {
        if (rec.true_min_step) {
            ++r.with_minimum;
            if (rec.detected()) {
                ++r.detections;
                err_sum += *rec.t_star_error();
                lat_sum += static_cast<double>(*rec.latency_epochs());
            }
        }
        if (rec.shape == TrajectoryShape::monotone_decay || rec.shape == TrajectoryShape::spiky_decay) {
            ++r.monotone;
            if (rec.switched()) {
                ++r.false_positives;
            }
        }
    }
    if (r.with_minimum > 0) {
        r.detection_rate = static_cast<double>(r.detections) / static_cast<double>(r.with_minimum);
    }
    if (r.monotone > 0) {
        r.false_positive_rate = static_cast<double>(r.false_positives) / static_cast<double>(r.monotone);
    }
    if (r.detections > 0) {
        r.mean_t_star_error = err_sum / static_cast<double>(r.detections);
        r.mean_latency_epochs = lat_sum / static_cast<double>(r.detections);
    }
    return r;
}

SeedRecord evaluate_one(const TrajectorySpec& spec, const DetectorConfig& cfg, std::size_t epoch_len) {
    if (epoch_len < 2) {
        throw PreconditionError("evaluate_detector: epoch_len must be >= 2");
    }
    cfg.validate();
    const LossTrajectory full = gen_trajectory(spec);

    SeedRecord rec;
    rec.shape = spec.shape;
    rec.seed = spec.seed;
    rec.true_min_step = spec.true_min_step();
    rec.epoch_len = epoch_len;

    Rng rng(mix_seed(spec.seed, 0xd37ec7ULL));
    LossTrajectory seen;
    seen.reserve(full.size());
    std::size_t flag = 0;
    for (const auto& e : full.entries()) {
        seen.record(e.step, e.loss);
        if ((e.step + 1) % epoch_len != 0) {
            continue;
        }
        const TestOutcome outcome = epoch_test(seen, cfg, rng);
        ++rec.tests_run;
        const auto decision = update_patience(flag, outcome, cfg, e.step);
        flag = decision.patience_flag;
        if (decision.switch_now) {
            rec.switch_epoch = e.step / epoch_len;
            rec.switch_step = e.step;
            rec.t_star = decision.t_star;
            break;
        }
    }
    return rec;
}

DetectionReport evaluate_detector(std::span<const TrajectorySpec> specs, const DetectorConfig& cfg,
                                  std::size_t epoch_len, std::span<const std::uint64_t> seeds) {
    std::vector<SeedRecord> records;
    records.reserve(specs.size() * seeds.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        for (std::uint64_t seed : seeds) {
            TrajectorySpec s = specs[i];
            s.seed = seed;
            SeedRecord rec = evaluate_one(s, cfg, epoch_len);
            rec.spec_index = i;
            records.push_back(rec);
        }
    }
    return DetectionReport::aggregate(std::move(records));
}

namespace {

template <typename T>
std::string opt_field(const std::optional<T>& v) {
    if (!v) {
        return "";
    }
    if constexpr (std::is_floating_point_v<T>) {
        return format_double(*v);
    } else {
        return std::to_string(*v);
    }
}

} // namespace

std::string report_csv(const DetectionReport& report) {
    std::ostringstream out;
    out << "spec_index,shape,seed,tests_run,switched,switch_epoch,switch_step,t_star,true_min_step,detected,"
           "t_star_error\n";
    for (const auto& r : report.records) {
        out << r.spec_index << ',' << to_string(r.shape) << ',' << r.seed << ',' << r.tests_run << ','
            << (r.switched() ? 1 : 0) << ',' << opt_field(r.switch_epoch) << ',' << opt_field(r.switch_step) << ','
            << opt_field(r.t_star) << ',' << opt_field(r.true_min_step) << ',' << (r.detected() ? 1 : 0) << ','
            << opt_field(r.t_star_error()) << '\n';
    }
    return out.str();
}

std::string report_summary_json(const DetectionReport& report) {
    nlohmann::ordered_json j;
    j["records"] = report.records.size();
    j["with_minimum"] = report.with_minimum;
    j["detections"] = report.detections;
    j["detection_rate"] = report.detection_rate;
    j["monotone"] = report.monotone;
    j["false_positives"] = report.false_positives;
    j["false_positive_rate"] = report.false_positive_rate;
    j["mean_t_star_error"] = report.mean_t_star_error ? nlohmann::ordered_json(*report.mean_t_star_error) : nlohmann::ordered_json();
    j["mean_latency_epochs"] =
        report.mean_latency_epochs ? nlohmann::ordered_json(*report.mean_latency_epochs) : nlohmann::ordered_json();
    return j.dump(2) + "\n";
}

} // namespace autowu::synthgen
