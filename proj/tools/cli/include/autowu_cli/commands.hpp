#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace autowu::cli {

// Stable process exit codes.
enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 1,
    kRuntimeFailure = 2,
    kIoError = 3,
};

struct RunOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    // Each seed replaces the run, dataset and model seeds of the config.
    std::optional<std::vector<std::uint64_t>> seeds;
    std::size_t workers = 1;
};

struct SweepOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::size_t workers = 1;
};

struct DetectEvalOptions {
    std::filesystem::path config;
    std::filesystem::path out;
};

struct PlotOptions {
    std::filesystem::path in;
    std::filesystem::path out;
};

// Each command reports problems on `err` and returns an ExitCode.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);
int cmd_detect_eval(const DetectEvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_plot(const PlotOptions& opts, std::ostream& out, std::ostream& err);

// Parses argv and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// `<out>/run_<hash>_seed<seed>`, or the same name with `_2`, `_3`, ... when
// that directory already exists.
std::filesystem::path fresh_run_dir(const std::filesystem::path& out, const std::string& hash, std::uint64_t seed);

} // namespace autowu::cli
