#pragma once

#include "autowu/synthgen.hpp"
#include "autowu/train.hpp"

#include <string>
#include <string_view>

namespace autowu {

// JSON config files. Every key is optional; missing keys take the defaults
// of the corresponding struct (for the scheduler section: eta_min 1e-5,
// eta_max 1, rho_w 0.5, n_test 5, c 0.95, p 3, tail fraction 0.2). Unknown
// keys, wrong types and out-of-range values throw ConfigInvalid naming the
// dotted field path.
train::ExperimentConfig parse_experiment_config(std::string_view json_text);

// Canonical JSON (all fields, sorted keys); parse_experiment_config of the
// result reproduces the config.
std::string to_json(const train::ExperimentConfig& cfg);

DetectorConfig parse_detector_config(std::string_view json_text);
std::string to_json(const DetectorConfig& cfg);

synthgen::TrajectorySpec parse_trajectory_spec(std::string_view json_text);
std::string to_json(const synthgen::TrajectorySpec& spec);

} // namespace autowu
