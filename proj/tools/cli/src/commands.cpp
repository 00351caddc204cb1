#include "autowu_cli/commands.hpp"

#include "autowu/config_io.hpp"
#include "autowu/error.hpp"
#include "autowu/experiment_log.hpp"
#include "autowu/synthgen.hpp"
#include "autowu/train.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

namespace autowu::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOFailure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_new_file(const fs::path& path, const std::string& text) {
    if (fs::exists(path)) throw IOFailure("refusing to overwrite " + path.string());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOFailure("cannot open " + path.string() + " for writing");
    out << text;
    if (!out.flush()) throw IOFailure("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IOFailure("cannot create " + dir.string() + ": " + ec.message());
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid("<root>", std::string("malformed JSON: ") + e.what());
    }
}

// Re-parses a nested section so field paths in errors carry the prefix.
template <typename T, typename Parse>
T parse_section(const json& section, const std::string& prefix, Parse&& parse) {
    try {
        return parse(section.dump());
    } catch (const ConfigInvalid& e) {
        const std::string field = e.field() == "<root>" ? prefix : prefix + "." + e.field();
        const std::string what = e.what();
        throw ConfigInvalid(field, what.substr(what.find(": ") + 2));
    }
}

// Runs fn(0..n-1) on up to `workers` threads. Results are stored by index by
// the callee, so output order never depends on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigInvalid& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidSpec& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IOFailure& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

struct RunResult {
    fs::path dir;
    std::string status;
    std::string error;
    std::optional<ExperimentLog> log;
};

// Runs one experiment and writes its log, partial on divergence.
RunResult run_one(const train::ExperimentConfig& cfg, const fs::path& dir) {
    RunResult r;
    r.dir = dir;
    ExperimentLog log;
    try {
        log = train::run_experiment(cfg);
    } catch (const train::RunAborted& e) {
        log = e.partial_log();
        r.error = e.what();
    }
    r.status = log.status;
    write_experiment_log(dir, log);
    r.log = std::move(log);
    return r;
}

} // namespace

fs::path fresh_run_dir(const fs::path& out, const std::string& hash, std::uint64_t seed) {
    const std::string base = "run_" + hash + "_seed" + std::to_string(seed);
    fs::path dir = out / base;
    for (int k = 2; fs::exists(dir); ++k) dir = out / (base + "_" + std::to_string(k));
    return dir;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto base = parse_experiment_config(read_file(opts.config));
        std::vector<train::ExperimentConfig> configs;
        if (opts.seeds) {
            if (opts.seeds->empty()) throw ConfigInvalid("--seeds", "empty seed list");
            for (auto s : *opts.seeds) {
                auto cfg = base;
                cfg.seed = s;
                cfg.dataset.seed = s;
                cfg.model.seed = s;
                configs.push_back(cfg);
            }
        } else {
            configs.push_back(base);
        }
        ensure_dir(opts.out);

        // Directories are claimed up front so concurrent runs never collide.
        std::vector<fs::path> dirs;
        for (const auto& cfg : configs) {
            const auto dir = fresh_run_dir(opts.out, fnv1a_hex(to_json(cfg)), cfg.seed);
            ensure_dir(dir);
            dirs.push_back(dir);
        }

        std::vector<RunResult> results(configs.size());
        std::vector<std::string> io_errors(configs.size());
        parallel_for(configs.size(), opts.workers, [&](std::size_t i) {
            try {
                results[i] = run_one(configs[i], dirs[i]);
            } catch (const IOFailure& e) {
                io_errors[i] = e.what();
            }
        });

        int code = kSuccess;
        for (std::size_t i = 0; i < configs.size(); ++i) {
            if (!io_errors[i].empty()) {
                err << "io error: " << io_errors[i] << '\n';
                code = std::max<int>(code, kIoError);
                continue;
            }
            out << results[i].dir.string() << ' ' << results[i].status << '\n';
            if (results[i].status != "completed") {
                err << "run diverged (seed " << configs[i].seed << "): " << results[i].error << '\n';
                if (code == kSuccess) code = kRuntimeFailure;
            }
        }
        return code;
    });
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const json root = parse_json(read_file(opts.config));
        if (!root.is_object()) throw ConfigInvalid("<root>", "expected an object");
        for (const auto& [key, value] : root.items()) {
            if (key != "base" && key != "peak_lrs" && key != "warmup_epochs") throw ConfigInvalid(key, "unknown key");
        }
        const json base_json = root.value("base", json::object());
        const auto base = parse_section<train::ExperimentConfig>(base_json, "base", parse_experiment_config);

        std::vector<double> peaks;
        std::vector<std::size_t> warmups;
        if (!root.contains("peak_lrs") || !root["peak_lrs"].is_array() || root["peak_lrs"].empty()) {
            throw ConfigInvalid("peak_lrs", "expected a non-empty array of positive numbers");
        }
        for (const auto& v : root["peak_lrs"]) {
            if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigInvalid("peak_lrs", "expected positive numbers");
            peaks.push_back(v.get<double>());
        }
        if (!root.contains("warmup_epochs") || !root["warmup_epochs"].is_array() || root["warmup_epochs"].empty()) {
            throw ConfigInvalid("warmup_epochs", "expected a non-empty array of non-negative integers");
        }
        for (const auto& v : root["warmup_epochs"]) {
            if (!v.is_number_unsigned()) throw ConfigInvalid("warmup_epochs", "expected non-negative integers");
            warmups.push_back(v.get<std::size_t>());
        }

        BaselineConfig proto;
        if (const auto* b = std::get_if<BaselineConfig>(&base.scheduler)) proto = *b;
        const auto grid = sweep_grid(proto, peaks, warmups);
        std::vector<train::ExperimentConfig> cells;
        for (const auto& cell : grid) {
            auto cfg = base;
            cfg.scheduler = cell;
            try {
                cfg.validate();
            } catch (const InvalidSpec& e) {
                throw ConfigInvalid("warmup_epochs", e.what());
            }
            cells.push_back(cfg);
        }

        ensure_dir(opts.out);
        const fs::path summary_path = opts.out / "sweep_summary.csv";
        if (fs::exists(summary_path)) throw IOFailure("refusing to overwrite " + summary_path.string());
        std::vector<fs::path> dirs;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto dir = opts.out / ("cell_" + std::to_string(i));
            if (fs::exists(dir)) throw IOFailure("refusing to reuse " + dir.string());
            dirs.push_back(dir);
        }

        std::vector<RunResult> results(cells.size());
        std::vector<std::string> io_errors(cells.size());
        parallel_for(cells.size(), opts.workers, [&](std::size_t i) {
            try {
                results[i] = run_one(cells[i], dirs[i]);
            } catch (const IOFailure& e) {
                io_errors[i] = e.what();
            }
        });

        std::ostringstream csv;
        csv << "cell,peak_lr,warmup_epochs,status,final_eval_loss,final_eval_acc,log_dir\n";
        int code = kSuccess;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& cell = grid[i];
            csv << i << ',' << format_double(cell.peak_lr()) << ',' << cell.warmup_epochs << ',';
            if (!io_errors[i].empty()) {
                err << "io error: " << io_errors[i] << '\n';
                code = kIoError;
                csv << "io_error,,," << dirs[i].filename().string() << '\n';
                continue;
            }
            const auto& r = results[i];
            csv << r.status << ',';
            if (r.status == "completed" && !r.log->epochs.empty()) {
                csv << format_double(r.log->epochs.back().eval_loss) << ','
                    << format_double(r.log->epochs.back().eval_acc);
            } else {
                csv << ',';
            }
            csv << ',' << dirs[i].filename().string() << '\n';
        }
        write_new_file(summary_path, csv.str());
        out << summary_path.string() << '\n';
        return code;
    });
}

int cmd_detect_eval(const DetectEvalOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const json root = parse_json(read_file(opts.config));
        if (!root.is_object()) throw ConfigInvalid("<root>", "expected an object");
        for (const auto& [key, value] : root.items()) {
            if (key != "detector" && key != "trajectories" && key != "epoch_len" && key != "seeds") {
                throw ConfigInvalid(key, "unknown key");
            }
        }
        const auto cfg =
            parse_section<DetectorConfig>(root.value("detector", json::object()), "detector", parse_detector_config);

        std::size_t epoch_len = 10;
        if (root.contains("epoch_len")) {
            if (!root["epoch_len"].is_number_unsigned() || root["epoch_len"].get<std::size_t>() < 2) {
                throw ConfigInvalid("epoch_len", "must be an integer >= 2");
            }
            epoch_len = root["epoch_len"].get<std::size_t>();
        }

        std::vector<std::uint64_t> seeds;
        const json seeds_json = root.value("seeds", json(std::uint64_t{100}));
        if (seeds_json.is_number_unsigned()) {
            for (std::uint64_t s = 0; s < seeds_json.get<std::uint64_t>(); ++s) seeds.push_back(s);
        } else if (seeds_json.is_array()) {
            for (const auto& s : seeds_json) {
                if (!s.is_number_unsigned()) throw ConfigInvalid("seeds", "expected non-negative integers");
                seeds.push_back(s.get<std::uint64_t>());
            }
        }
        if (seeds.empty()) throw ConfigInvalid("seeds", "expected a positive count or a non-empty list");

        if (!root.contains("trajectories") || !root["trajectories"].is_array() || root["trajectories"].empty()) {
            throw ConfigInvalid("trajectories", "expected a non-empty array of trajectory specs");
        }
        std::vector<synthgen::TrajectorySpec> specs;
        for (std::size_t i = 0; i < root["trajectories"].size(); ++i) {
            specs.push_back(parse_section<synthgen::TrajectorySpec>(
                root["trajectories"][i], "trajectories[" + std::to_string(i) + "]", parse_trajectory_spec));
        }

        ensure_dir(opts.out);
        const fs::path csv_path = opts.out / "detect_report.csv";
        const fs::path json_path = opts.out / "detect_summary.json";
        for (const auto& p : {csv_path, json_path}) {
            if (fs::exists(p)) throw IOFailure("refusing to overwrite " + p.string());
        }
        const auto report = synthgen::evaluate_detector(specs, cfg, epoch_len, seeds);
        write_new_file(csv_path, synthgen::report_csv(report));
        write_new_file(json_path, synthgen::report_summary_json(report));
        out << "detection_rate " << format_double(report.detection_rate) << " false_positive_rate "
            << format_double(report.false_positive_rate) << '\n';
        return kSuccess;
    });
}

} // namespace autowu::cli
