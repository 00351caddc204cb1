// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   autowu_acceptance            run every criterion
//   autowu_acceptance NAME...    run the named criteria only
//   autowu_acceptance --list     print the criterion names
//
// Exit status is the number of failed criteria (capped at 125).

#include "autowu/detector.hpp"
#include "autowu/experiment_log.hpp"
#include "autowu/gp.hpp"
#include "autowu/optim.hpp"
#include "autowu/schedule.hpp"
#include "autowu/synthgen.hpp"
#include "autowu/train.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace autowu;
using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    const char* name;
    Verdict (*run)();
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

gp::NormalizedObservations random_obs(Rng& rng, std::size_t n) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.uniform();
    std::sort(xs.begin(), xs.end());
    std::vector<double> ys(n);
    for (auto& y : ys) y = 1.0 + 0.5 * rng.normal();
    return {xs, ys};
}

gp::GPParams random_params(Rng& rng) {
    return gp::GPParams::from_stds(1.0 + 0.3 * rng.normal(), 0.3 + rng.uniform(), 0.05 + 0.3 * rng.uniform());
}

Verdict gp_correctness() {
    const auto start = Clock::now();
    Rng rng(2024);
    double worst_post = 0.0;
    double worst_grad = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto obs = random_obs(rng, 1 + rng.uniform_below(10));
        const auto p = random_params(rng);
        const std::size_t grid_size = 2 + rng.uniform_below(19);
        const auto post = gp::posterior(obs, p, grid_size);
        const auto dense = oracle::dense_posterior(obs.xs(), obs.ys(), post.grid, p);
        for (std::size_t i = 0; i < grid_size; ++i) {
            worst_post = std::max(worst_post, std::abs(post.mean[i] - dense.mean[i]));
            for (std::size_t j = 0; j < grid_size; ++j) {
                // Negative diagonal round-off is clamped to 0 by the library.
                const double ref = i == j ? std::max(dense.cov(i, j), 0.0) : dense.cov(i, j);
                worst_post = std::max(worst_post, std::abs(post.cov(i, j) - ref));
            }
        }
        const auto lml = gp::log_marginal_likelihood(obs, p);
        auto value_at = [&](const std::vector<double>& v) {
            return gp::log_marginal_likelihood(obs, gp::GPParams{v[0], v[1], v[2]}).value;
        };
        const std::vector<double> v{p.mean, p.log_signal_std, p.log_noise_std};
        for (std::size_t i = 0; i < 3; ++i) {
            const double fd = oracle::central_difference(value_at, v, i, 1e-5);
            worst_grad = std::max(worst_grad, std::abs(lml.gradient[i] - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    const double secs = seconds_since(start);
    return {worst_post <= 1e-8 && worst_grad <= 1e-5 && secs < 10.0,
            fmt("50 instances, max |posterior - dense| %.2e (tol 1e-8), max grad rel err %.2e (tol 1e-5), %.2fs "
                "(limit 10s)",
                worst_post, worst_grad, secs)};
}

Verdict p_min_monte_carlo() {
    Rng rng(77);
    Rng mc(78);
    double worst = 0.0;
    double worst_contrast = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto obs = random_obs(rng, 2 + rng.uniform_below(12));
        const auto p = random_params(rng);
        const std::size_t grid_size = 10 + rng.uniform_below(11);
        const auto post = gp::posterior(obs, p, grid_size);
        const double exact = gp::p_min(post);
        const double estimate = oracle::monte_carlo_p_min(post.mean, post.cov, 100000, mc);
        worst = std::max(worst, std::abs(exact - estimate));
        worst_contrast = std::max(worst_contrast, std::abs(gp::p_min(gp::endpoint_contrast(obs, p, grid_size)) - exact));
    }
    return {worst <= 0.01 && worst_contrast <= 1e-9,
            fmt("20 posteriors, max |p_min - MC(1e5)| %.4f (tol 0.01), endpoint-contrast path agrees to %.1e", worst,
                worst_contrast)};
}

Verdict detector_metrics() {
    const auto start = Clock::now();
    std::vector<std::uint64_t> seeds(100);
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
    const std::size_t epoch_len = 10;

    synthgen::TrajectorySpec vee;
    vee.shape = synthgen::TrajectoryShape::v_shape;
    vee.min_fraction = 0.5;
    vee.noise_rel = 0.03;
    synthgen::TrajectorySpec mono;
    mono.noise_rel = 0.03;
    synthgen::TrajectorySpec spiky;
    spiky.shape = synthgen::TrajectoryShape::spiky_decay;
    spiky.noise_rel = 0.03;
    spiky.spike_prob = 0.02;
    spiky.spike_magnitude = 1.0;

    const DetectorConfig cfg;
    const auto v = synthgen::evaluate_detector(std::vector{vee}, cfg, epoch_len, seeds);
    const auto m = synthgen::evaluate_detector(std::vector{mono}, cfg, epoch_len, seeds);
    DetectorConfig p1 = cfg;
    p1.patience = 1;
    DetectorConfig p3 = cfg;
    p3.patience = 3;
    const auto s1 = synthgen::evaluate_detector(std::vector{spiky}, p1, epoch_len, seeds);
    const auto s3 = synthgen::evaluate_detector(std::vector{spiky}, p3, epoch_len, seeds);
    const double secs = seconds_since(start);

    const double t_err = v.mean_t_star_error.value_or(1.0);
    const bool pass = v.detection_rate >= 0.90 && t_err <= 0.10 && m.false_positive_rate <= 0.05 &&
                      s3.false_positive_rate <= s1.false_positive_rate && secs < 300.0;
    return {pass, fmt("v_shape detection %.2f (>=0.90), mean t* err %.4f (<=0.10); monotone FP %.2f (<=0.05); "
                      "spiky FP p=1 %.2f, p=3 %.2f; %.0fs (limit 300s)",
                      v.detection_rate, t_err, m.false_positive_rate, s1.false_positive_rate, s3.false_positive_rate,
                      secs)};
}

Verdict schedule_exactness() {
    std::vector<std::string> failures;
    AutoWUConfig cfg;
    cfg.total_steps = 10000;
    const std::size_t cap = cfg.warmup_cap();
    AutoWUScheduler sched(cfg, 0);
    const double gamma = cfg.gamma();
    double worst = 0.0;
    for (std::size_t t = 0; t <= cap; ++t) {
        const double expect = cfg.eta_min * std::pow(gamma, static_cast<double>(t));
        worst = std::max(worst, std::abs(sched.current_lr() - expect) / expect);
        if (t == cap && std::abs(sched.current_lr() - cfg.eta_max) > 1e-12 * cfg.eta_max) {
            failures.push_back("eta at cap");
        }
        sched.step(1.0, false);
    }
    if (worst > 1e-12) failures.push_back("warmup trace");

    SchedulerState st;
    st.phase = Phase::decay;
    st.switch_step = 4000;
    st.decay_start_lr = 0.3;
    if (decay_lr(4000, st, cfg) != 0.3) failures.push_back("cosine start");
    if (std::abs(decay_lr(7000, st, cfg) - 0.15) > 1e-12 * 0.15) failures.push_back("cosine midpoint");
    if (decay_lr(10000, st, cfg) != 0.0) failures.push_back("cosine end");

    cfg.decay_shape = DecayShape::constant_then_cosine;
    for (std::size_t t = 4000; t <= 8000; ++t) {
        if (decay_lr(t, st, cfg) != 0.3) {
            failures.push_back("constant segment");
            break;
        }
    }
    if (!(decay_lr(8001, st, cfg) < 0.3)) failures.push_back("tail start");
    if (std::abs(decay_lr(9000, st, cfg) - 0.15) > 1e-12) failures.push_back("tail midpoint");
    if (decay_lr(10000, st, cfg) != 0.0) failures.push_back("tail end");

    BaselineConfig b;
    for (std::size_t batch : {256u, 1024u, 4096u}) {
        b.batch_size = batch;
        const double expect = b.eta_base * std::sqrt(static_cast<double>(batch) / 256.0);
        if (std::abs(b.peak_lr() - expect) > 1e-15) failures.push_back("baseline peak B=" + std::to_string(batch));
    }

    std::string detail = fmt("warmup ratio rel err %.1e over %zu steps", worst, cap);
    for (const auto& f : failures) detail += "; failed: " + f;
    if (failures.empty()) detail += "; cosine/constant-then-cosine endpoints and sqrt baseline peaks exact";
    return {failures.empty(), detail};
}

Verdict optimizer_suite() {
    using namespace optim;
    const auto start = Clock::now();
    std::vector<std::string> failures;
    auto no_decay = [](OptimizerKind kind) {
        auto c = OptimizerConfig::defaults(kind);
        c.weight_decay = 0.0;
        return c;
    };
    auto dot = [](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };

    {
        const auto c = no_decay(OptimizerKind::adam);
        ParamGroup g({1.0, 1.0, 1.0}, "w");
        const std::vector<double> grad{0.3, -2.0, 1e-3};
        adam_step(g, grad, 0.01, c);
        for (std::size_t i = 0; i < 3; ++i) {
            if (std::abs(g.values[i] - (1.0 - 0.01 * grad[i] / (std::abs(grad[i]) + c.eps))) > 1e-15) {
                failures.push_back("adam first step");
                break;
            }
        }
    }
    {
        Rng rng(9);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            auto c = no_decay(OptimizerKind::adamp);
            const std::size_t dim = 2 + rng.uniform_below(30);
            c.delta = 2.0 * std::sqrt(static_cast<double>(dim));
            std::vector<double> w(dim);
            for (auto& v : w) v = rng.normal();
            std::vector<double> g(dim);
            const double scale = 0.1 + rng.uniform();
            for (std::size_t i = 0; i < dim; ++i) g[i] = scale * w[i];
            ParamGroup p(w, "layer0.weight");
            adamp_step(p, g, 0.1, c);
            std::vector<double> u(dim);
            for (std::size_t i = 0; i < dim; ++i) u[i] = p.values[i] - w[i];
            worst = std::max(worst, std::abs(dot(u, w)) / (std::sqrt(dot(u, u) * dot(w, w)) + 1e-300));
        }
        if (worst > 1e-10) failures.push_back(fmt("adamp radial %.1e", worst));
    }
    {
        Rng rng(3);
        const auto c = OptimizerConfig::defaults(OptimizerKind::adamp);
        auto adam = c;
        adam.kind = OptimizerKind::adam;
        std::vector<double> w(6);
        for (auto& v : w) v = rng.normal();
        ParamGroup p(w, "layer0.weight");
        ParamGroup q(w, "layer0.weight");
        for (int s = 0; s < 20; ++s) {
            std::vector<double> g(6);
            for (std::size_t i = 0; i < 6; ++i) g[i] = p.values[i] + 0.01 * rng.normal();
            if (adamp_projection_engaged(p.values, g, c.delta)) failures.push_back("criterion unexpectedly met");
            adamp_step(p, g, 0.01, c);
            adam_step(q, g, 0.01, adam);
        }
        if (p.values != q.values) failures.push_back("adamp vs adam when unmet");
    }
    {
        const auto c = no_decay(OptimizerKind::lamb);
        ParamGroup l({0.0, 0.0}, "layer0.weight");
        lamb_step(l, std::vector<double>{0.5, -2.0}, 0.1, c);
        if (std::abs(l.values[0] + 0.1 * 0.5 / (0.5 + c.eps)) > 1e-15 ||
            std::abs(l.values[1] - 0.1 * 2.0 / (2.0 + c.eps)) > 1e-15) {
            failures.push_back("lamb phi=1 on zero weights");
        }
    }
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam, OptimizerKind::adamp, OptimizerKind::lamb}) {
        const auto c = no_decay(kind);
        ParamGroup g({1.0, 1.0}, "x");
        const double before = 0.5 * dot(g.values, g.values);
        for (int i = 0; i < 200; ++i) {
            const std::vector<double> grad = g.values;
            optimizer_step(g, grad, 0.01, c);
        }
        if (!(0.5 * dot(g.values, g.values) < before)) failures.push_back("quadratic " + std::string(to_string(kind)));
    }
    const double secs = seconds_since(start);
    if (secs >= 10.0) failures.push_back("runtime");
    std::string detail = fmt("adam closed form, adamp radial/equivalence, lamb phi=1, 4 optimizers on quadratic; %.3fs",
                             secs);
    for (const auto& f : failures) detail += "; failed: " + f;
    return {failures.empty(), detail};
}

// Noisy 4-class blobs with an MLP; shared by the end-to-end and warmup
// sensitivity criteria.
train::ExperimentConfig mlp_task(std::uint64_t seed, std::size_t batch) {
    train::ExperimentConfig c;
    c.dataset.kind = train::DatasetKind::gaussian_blobs;
    c.dataset.n_samples = 8192;
    c.dataset.n_features = 8;
    c.dataset.n_classes = 4;
    c.dataset.noise = 2.5;
    c.dataset.seed = seed;
    c.model.hidden_sizes = {32};
    c.model.seed = seed;
    c.optimizer = optim::OptimizerConfig::defaults(optim::OptimizerKind::adamp);
    c.batch_size = batch;
    c.epochs = 50;
    c.seed = seed;
    return c;
}

double final_loss(const ExperimentLog& log) {
    return log.epochs.back().eval_loss;
}

std::size_t phase_transitions(const ExperimentLog& log) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < log.steps.size(); ++i) n += log.steps[i].phase != log.steps[i - 1].phase ? 1 : 0;
    return n;
}

Verdict end_to_end() {
    const auto start = Clock::now();
    const std::vector<double> grid{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    bool pass = true;
    std::string detail;
    for (std::size_t batch : {64u, 512u}) {
        std::size_t within = 0;
        std::string ratios;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto cfg = mlp_task(seed, batch);
            double best = INFINITY;
            for (double lr : grid) {
                cfg.scheduler = train::FixedLR{lr};
                try {
                    best = std::min(best, final_loss(train::run_experiment(cfg)));
                } catch (const train::RunAborted&) {
                    // A diverged grid point is simply not a candidate.
                }
            }
            cfg.scheduler = AutoWUConfig{};
            const auto log = train::run_experiment(cfg);
            const double ratio = final_loss(log) / best;
            const bool shape_ok = phase_transitions(log) == 1 && log.switch_info && log.switch_info->decay_start_lr > 0.0;
            if (!shape_ok) pass = false;
            within += ratio <= 1.2 ? 1 : 0;
            ratios += fmt("%s%.3f", ratios.empty() ? "" : " ", ratio);
        }
        if (within < 4) pass = false;
        detail += fmt("B=%zu: %zu/5 seeds within 1.2x of best fixed LR (ratios %s); ", batch, within, ratios.c_str());
    }
    const double secs = seconds_since(start);
    if (secs >= 600.0) pass = false;
    detail += fmt("one transition and positive decay-start LR in every run: %s; %.0fs (limit 600s)",
                  pass ? "yes" : "see above", secs);
    return {pass, detail};
}

Verdict linear_warmup_sensitivity() {
    const std::size_t batch = 512;
    std::size_t exp_completed = 0;
    std::size_t collapsed = 0;
    std::string ratios;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto cfg = mlp_task(seed, batch);
        AutoWUConfig a;
        a.eta_max = 1.0;
        cfg.scheduler = a;
        double exp_loss = INFINITY;
        try {
            exp_loss = final_loss(train::run_experiment(cfg));
            ++exp_completed;
        } catch (const train::RunAborted&) {
        }
        a.warmup_growth = WarmupGrowth::linear;
        cfg.scheduler = a;
        try {
            const double lin = final_loss(train::run_experiment(cfg));
            const double ratio = lin / exp_loss;
            collapsed += ratio >= 2.0 ? 1 : 0;
            ratios += fmt("%s%.3f", ratios.empty() ? "" : " ", ratio);
        } catch (const train::RunAborted&) {
            ++collapsed;
            ratios += ratios.empty() ? "diverged" : " diverged";
        }
    }
    return {collapsed >= 3 && exp_completed == 5,
            fmt("B=%zu, eta_max 1: linear diverged or >=2x exponential loss in %zu/5 seeds (need >=3), "
                "linear/exponential loss ratios %s; exponential completed %zu/5",
                batch, collapsed, ratios.c_str(), exp_completed)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism() {
    const auto root = std::filesystem::temp_directory_path() / "autowu_acceptance_determinism";
    std::filesystem::remove_all(root);
    std::vector<std::string> failures;

    std::vector<train::ExperimentConfig> configs;
    auto base = mlp_task(11, 128);
    base.dataset.n_samples = 2048;
    base.epochs = 8;
    configs.push_back(base);
    auto baseline = base;
    baseline.scheduler = BaselineConfig{};
    configs.push_back(baseline);
    auto lamb = base;
    lamb.optimizer = optim::OptimizerConfig::defaults(optim::OptimizerKind::lamb);
    lamb.scheduler = train::FixedLR{0.01};
    configs.push_back(lamb);

    for (std::size_t i = 0; i < configs.size(); ++i) {
        for (const char* run : {"a", "b"}) {
            write_experiment_log(root / std::to_string(i) / run, train::run_experiment(configs[i]));
        }
        for (const char* file : {"steps.csv", "epochs.csv"}) {
            const auto a = slurp(root / std::to_string(i) / "a" / file);
            if (a.empty() || a != slurp(root / std::to_string(i) / "b" / file)) {
                failures.push_back("config " + std::to_string(i) + " " + file);
            }
        }
    }

    synthgen::TrajectorySpec spec;
    spec.shape = synthgen::TrajectoryShape::v_shape;
    spec.noise_rel = 0.03;
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const auto r1 = synthgen::report_csv(synthgen::evaluate_detector(std::vector{spec}, DetectorConfig{}, 10, seeds));
    const auto r2 = synthgen::report_csv(synthgen::evaluate_detector(std::vector{spec}, DetectorConfig{}, 10, seeds));
    if (r1 != r2) failures.push_back("detector report csv");
    std::filesystem::remove_all(root);

    std::string detail = "3 training configs x 2 reruns (steps.csv, epochs.csv) and detector report csv";
    for (const auto& f : failures) detail += "; differs: " + f;
    if (failures.empty()) detail += ": byte-identical";
    return {failures.empty(), detail};
}

Verdict gp_test_overhead() {
    const std::size_t length = 1000000;
    LossTrajectory traj;
    traj.reserve(length);
    Rng noise(5);
    for (std::size_t t = 0; t < length; ++t) {
        const double base = 1.0 + 2.0 * std::exp(-3.0 * static_cast<double>(t) / static_cast<double>(length));
        traj.record(t, base * (1.0 + 0.03 * noise.normal()));
    }
    Rng rng(6);
    double worst = 0.0;
    double total = 0.0;
    const int runs = 5;
    for (int i = 0; i < runs; ++i) {
        const auto start = Clock::now();
        epoch_test(traj, DetectorConfig{}, rng);
        const double ms = 1000.0 * seconds_since(start);
        worst = std::max(worst, ms);
        total += ms;
    }
    return {worst < 1000.0,
            fmt("epoch test on 1e6 recorded steps: mean %.1f ms, max %.1f ms over %d runs (limit 1000 ms)",
                total / runs, worst, runs)};
}

const Criterion kCriteria[] = {
    {"gp_correctness", gp_correctness},
    {"p_min_monte_carlo", p_min_monte_carlo},
    {"detector_metrics", detector_metrics},
    {"schedule_exactness", schedule_exactness},
    {"optimizer_suite", optimizer_suite},
    {"end_to_end", end_to_end},
    {"linear_warmup_sensitivity", linear_warmup_sensitivity},
    {"determinism", determinism},
    {"gp_test_overhead", gp_test_overhead},
};

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (wanted.size() == 1 && wanted[0] == "--list") {
        for (const auto& c : kCriteria) std::printf("%s\n", c.name);
        return 0;
    }
    for (const auto& w : wanted) {
        const bool known = std::any_of(std::begin(kCriteria), std::end(kCriteria),
                                       [&](const Criterion& c) { return w == c.name; });
        if (!known) {
            std::fprintf(stderr, "unknown criterion: %s\n", w.c_str());
            return 126;
        }
    }
    int failed = 0;
    for (const auto& c : kCriteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str());
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    }
    return std::min(failed, 125);
}
