#include "autowu/experiment_log.hpp"

#include "autowu/error.hpp"
#include "autowu/numerics.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef AUTOWU_VERSION_STRING
#define AUTOWU_VERSION_STRING "0.0.0"
#endif

namespace autowu {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

std::string steps_csv(const ExperimentLog& log) {
    std::ostringstream out;
    out << "step,epoch,lr,train_loss,phase\n";
    for (const auto& s : log.steps) {
        out << s.step << ',' << s.epoch << ',' << format_double(s.lr) << ',' << format_double(s.train_loss) << ','
            << s.phase << '\n';
    }
    return out.str();
}

std::string epochs_csv(const ExperimentLog& log) {
    std::ostringstream out;
    out << "epoch,eval_loss,eval_acc,detected,patience_flag";
    for (std::size_t i = 1; i <= log.p_min_columns; ++i) {
        out << ",p_min_" << i;
    }
    out << ",t_star,gp_test_ms\n";
    for (const auto& e : log.epochs) {
        out << e.epoch << ',' << format_double(e.eval_loss) << ',' << format_double(e.eval_acc) << ',';
        if (e.detected) out << (*e.detected ? 1 : 0);
        out << ',';
        if (e.patience_flag) out << *e.patience_flag;
        for (std::size_t i = 0; i < log.p_min_columns; ++i) {
            out << ',';
            if (i < e.p_min.size()) out << format_double(e.p_min[i]);
        }
        out << ',';
        if (e.t_star) out << *e.t_star;
        out << ',';
        if (e.gp_test_ms) out << format_double(*e.gp_test_ms);
        out << '\n';
    }
    return out.str();
}

std::string meta_json(const ExperimentLog& log) {
    nlohmann::ordered_json j;
    j["version"] = artifact_version();
    j["rng_algorithm"] = Rng::kAlgorithm;
    j["config_hash"] = log.config_hash;
    j["config"] = log.config_json.empty() ? nlohmann::ordered_json::object()
                                          : nlohmann::ordered_json::parse(log.config_json);
    j["scheduler"] = log.scheduler_kind;
    j["total_steps"] = log.total_steps;
    j["steps_logged"] = log.steps.size();
    j["status"] = log.status;
    if (!log.abort_reason.empty()) j["abort_reason"] = log.abort_reason;
    if (log.switch_info) {
        j["switch"] = {{"switch_step", log.switch_info->switch_step},
                       {"t_star", log.switch_info->t_star},
                       {"decay_start_lr", log.switch_info->decay_start_lr},
                       {"forced", log.switch_info->forced}};
    } else {
        j["switch"] = nullptr;
    }
    j["timing"] = {{"epoch_wall_ms", log.epoch_wall_ms}, {"gp_test_ms", log.gp_test_ms}};
    return j.dump(2) + "\n";
}

namespace {

void write_new_file(const std::filesystem::path& path, const std::string& content) {
    if (std::filesystem::exists(path)) {
        throw IOFailure("refusing to overwrite " + path.string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOFailure("cannot open " + path.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw IOFailure("failed writing " + path.string());
}

} // namespace

void write_experiment_log(const std::filesystem::path& dir, const ExperimentLog& log) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IOFailure("cannot create " + dir.string() + ": " + ec.message());
    for (const char* name : {"steps.csv", "epochs.csv", "meta.json"}) {
        if (std::filesystem::exists(dir / name)) {
            throw IOFailure("refusing to overwrite " + (dir / name).string());
        }
    }
    write_new_file(dir / "steps.csv", steps_csv(log));
    write_new_file(dir / "epochs.csv", epochs_csv(log));
    write_new_file(dir / "meta.json", meta_json(log));
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf.data(), 16);
}

std::string artifact_version() {
    return AUTOWU_VERSION_STRING;
}

} // namespace autowu
