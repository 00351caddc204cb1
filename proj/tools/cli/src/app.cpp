#include "autowu_cli/commands.hpp"

#include "autowu/experiment_log.hpp"

#include <CLI11.hpp>

#include <ostream>

namespace autowu::cli {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"AutoWU: automated LR warmup and decay experiments"};
    app.set_version_flag("--version", artifact_version());
    app.require_subcommand(1);

    RunOptions run;
    std::vector<std::uint64_t> seeds;
    auto* run_cmd = app.add_subcommand("run", "train one config (or one run per seed)");
    run_cmd->add_option("--config", run.config, "experiment config (JSON)")->required();
    run_cmd->add_option("--out", run.out, "output directory")->required();
    auto* seeds_opt = run_cmd->add_option("--seeds", seeds, "comma-separated seeds overriding the config")
                          ->delimiter(',');
    run_cmd->add_option("--workers", run.workers, "concurrent runs")->check(CLI::PositiveNumber);

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "baseline grid over peak LR and warmup epochs");
    sweep_cmd->add_option("--config", sweep.config, "sweep config (JSON)")->required();
    sweep_cmd->add_option("--out", sweep.out, "output directory")->required();
    sweep_cmd->add_option("--workers", sweep.workers, "concurrent cells")->check(CLI::PositiveNumber);

    DetectEvalOptions detect;
    auto* detect_cmd = app.add_subcommand("detect-eval", "detector metrics on synthetic loss trajectories");
    detect_cmd->add_option("--config", detect.config, "detector evaluation config (JSON)")->required();
    detect_cmd->add_option("--out", detect.out, "output directory")->required();

    PlotOptions plot;
    auto* plot_cmd = app.add_subcommand("plot", "SVG plots of run logs or a sweep summary");
    plot_cmd->add_option("--in", plot.in, "run, seed-battery or sweep directory")->required();
    plot_cmd->add_option("--out", plot.out, "directory for the SVG files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::CallForVersion&) {
        out << artifact_version() << '\n';
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
            err << sub->help();
        }
        return kConfigError;
    }

    if (*run_cmd) {
        if (*seeds_opt) run.seeds = seeds;
        return cmd_run(run, out, err);
    }
    if (*sweep_cmd) return cmd_sweep(sweep, out, err);
    if (*detect_cmd) return cmd_detect_eval(detect, out, err);
    return cmd_plot(plot, out, err);
}

} // namespace autowu::cli
