#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autowu {

struct StepRecord {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    // "warmup", "decay" or "constant".
    std::string phase;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double eval_loss = 0.0;
    double eval_acc = 0.0;
    // Present when a detector test ran at the end of this epoch.
    std::optional<bool> detected;
    std::optional<std::size_t> patience_flag;
    std::vector<double> p_min;
    // Present from the epoch containing the switch onwards.
    std::optional<std::size_t> t_star;
    std::optional<double> gp_test_ms;
};

struct SwitchInfo {
    std::size_t switch_step = 0;
    std::size_t t_star = 0;
    double decay_start_lr = 0.0;
    bool forced = false;
};

// Everything a run produces. steps.csv / epochs.csv carry the deterministic
// part; meta.json echoes the config and carries wall-clock timings.
struct ExperimentLog {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    // Number of p_min_<i> columns in epochs.csv (detector n_test, or 0).
    std::size_t p_min_columns = 0;
    std::size_t total_steps = 0;
    std::string config_json;
    std::string config_hash;
    std::string scheduler_kind;
    std::optional<SwitchInfo> switch_info;
    // "completed" or "diverged".
    std::string status = "completed";
    std::string abort_reason;
    std::vector<double> epoch_wall_ms;
    std::vector<double> gp_test_ms;
};

// Shortest round-trip decimal form; the basis of byte-identical logs.
std::string format_double(double value);

// steps.csv: step,epoch,lr,train_loss,phase
std::string steps_csv(const ExperimentLog& log);
// epochs.csv: epoch,eval_loss,eval_acc,detected,patience_flag,p_min_1..p_min_n,t_star,gp_test_ms
std::string epochs_csv(const ExperimentLog& log);
std::string meta_json(const ExperimentLog& log);

// Writes steps.csv, epochs.csv and meta.json into `dir`, which must not
// already contain them. Throws IOFailure.
void write_experiment_log(const std::filesystem::path& dir, const ExperimentLog& log);

// 64-bit FNV-1a of `text` as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

std::string artifact_version();

} // namespace autowu
