#include "autowu/gp.hpp"

#include "autowu/error.hpp"
#include "autowu/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace autowu::gp {

GPParams GPParams::from_stds(double mean, double signal_std, double noise_std) {
    if (!(signal_std > 0.0) || !(noise_std > 0.0)) {
        throw PreconditionError("GPParams: signal_std and noise_std must be positive");
    }
    return {mean, std::log(signal_std), std::log(noise_std)};
}

double GPParams::signal_std() const { return std::exp(log_signal_std); }
double GPParams::noise_std() const { return std::exp(log_noise_std); }

NormalizedObservations::NormalizedObservations(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size()) {
        throw PreconditionError("NormalizedObservations: xs and ys differ in length");
    }
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        if (!(xs_[i] >= 0.0 && xs_[i] <= 1.0)) {
            throw PreconditionError("NormalizedObservations: x outside [0, 1]");
        }
        if (i > 0 && xs_[i] < xs_[i - 1]) {
            throw PreconditionError("NormalizedObservations: xs not sorted");
        }
        if (!std::isfinite(ys_[i])) {
            throw PreconditionError("NormalizedObservations: non-finite y");
        }
    }
}

std::vector<double> uniform_grid(std::size_t size) {
    if (size < 2) {
        throw PreconditionError("uniform_grid: need at least 2 points");
    }
    std::vector<double> grid(size);
    const auto last = static_cast<double>(size - 1);
    for (std::size_t i = 0; i < size; ++i) {
        grid[i] = static_cast<double>(i) / last;
    }
    grid.back() = 1.0;
    return grid;
}

Matrix kernel_matrix(std::span<const double> xs_a, std::span<const double> xs_b, const GPParams& params) {
    const double var = std::exp(2.0 * params.log_signal_std);
    const double scale = -0.5 / (kLengthScale * kLengthScale);
    Matrix k(xs_a.size(), xs_b.size());
    for (std::size_t i = 0; i < xs_a.size(); ++i) {
        auto row = k.row(i);
        for (std::size_t j = 0; j < xs_b.size(); ++j) {
            const double d = xs_a[i] - xs_b[j];
            row[j] = var * std::exp(scale * d * d);
        }
    }
    return k;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct Conditioned {
    CholeskyFactor factor;
    std::vector<double> centered; // ys - mean
    std::vector<double> alpha;    // K^{-1} (ys - mean)
};

Conditioned condition(const NormalizedObservations& obs, const GPParams& params) {
    Matrix k = kernel_matrix(obs.xs(), obs.xs(), params);
    const double noise_var = std::exp(2.0 * params.log_noise_std);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        k(i, i) += noise_var;
    }
    Conditioned c{cholesky_factor(k), {}, {}};
    c.centered.resize(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        c.centered[i] = obs.ys()[i] - params.mean;
    }
    c.alpha = cholesky_solve(c.factor.lower, c.centered);
    return c;
}

} // namespace

LogMarginalLikelihood log_marginal_likelihood(const NormalizedObservations& obs, const GPParams& params) {
    if (obs.empty()) {
        throw PreconditionError("log_marginal_likelihood: no observations");
    }
    const auto c = condition(obs, params);
    const auto n = static_cast<double>(obs.size());
    const Matrix& lower = c.factor.lower;

    double log_det_half = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        log_det_half += std::log(lower(i, i));
    }
    const double fit_term = dot(c.centered, c.alpha);

    // tr(K^{-1}) = ||L^{-1}||_F^2
    const Matrix inv = invert_lower(lower);
    double trace_inv = 0.0;
    for (double v : inv.data()) {
        trace_inv += v * v;
    }
    const double alpha_sq = dot(c.alpha, c.alpha);
    const double noise_var = std::exp(2.0 * params.log_noise_std);
    // K = sf^2 R + s I with s the noise variance plus any jitter.
    const double s = noise_var + c.factor.jitter;

    LogMarginalLikelihood out;
    out.value = -0.5 * fit_term - log_det_half - 0.5 * n * kLog2Pi;
    out.gradient[0] = std::accumulate(c.alpha.begin(), c.alpha.end(), 0.0);
    out.gradient[1] = (fit_term - s * alpha_sq) - (n - s * trace_inv);
    out.gradient[2] = noise_var * (alpha_sq - trace_inv);
    return out;
}

GPParams initial_params(const NormalizedObservations& obs) {
    const auto ys = obs.ys();
    const auto n = static_cast<double>(ys.size());
    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double ss = 0.0;
    for (double y : ys) {
        ss += (y - mean) * (y - mean);
    }
    const double sd = std::max(std::sqrt(ss / n), 1e-4);
    return GPParams::from_stds(mean, sd, 0.1 * sd);
}

GPParams fit(const NormalizedObservations& obs) {
    if (obs.size() < 2) {
        throw PreconditionError("gp::fit: need at least 2 observations, got " + std::to_string(obs.size()));
    }
    const GPParams start = initial_params(obs);
    optim::ParamGroup group({start.mean, start.log_signal_std, start.log_noise_std}, "gp");
    const auto adam = optim::OptimizerConfig::defaults(optim::OptimizerKind::adam);

    GPParams params = start;
    for (std::size_t step = 0; step < kFitSteps; ++step) {
        LogMarginalLikelihood lml;
        try {
            lml = log_marginal_likelihood(obs, params);
        } catch (const NotPositiveDefinite& e) {
            throw FitDiverged(std::string("gp::fit: ") + e.what());
        }
        if (!std::isfinite(lml.value) || !std::all_of(lml.gradient.begin(), lml.gradient.end(),
                                                      [](double g) { return std::isfinite(g); })) {
            throw FitDiverged("gp::fit: objective became non-finite at step " + std::to_string(step));
        }
        const std::array<double, 3> descent{-lml.gradient[0], -lml.gradient[1], -lml.gradient[2]};
        optim::adam_step(group, descent, kFitLearningRate, adam);
        params = {group.values[0], group.values[1], group.values[2]};
    }
    if (!std::isfinite(params.mean) || !std::isfinite(params.log_signal_std) ||
        !std::isfinite(params.log_noise_std)) {
        throw FitDiverged("gp::fit: parameters became non-finite");
    }
    return params;
}

namespace {

// V = L^{-1} K(xs, grid), stored n x G, plus the posterior mean on the grid.
struct CrossTerms {
    Matrix v;
    std::vector<double> mean;
};

CrossTerms cross_terms(const NormalizedObservations& obs, const GPParams& params, std::span<const double> grid) {
    const auto c = condition(obs, params);
    Matrix ks = kernel_matrix(obs.xs(), grid, params);
    std::vector<double> mean(grid.size(), params.mean);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double a = c.alpha[i];
        const auto row = ks.row(i);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            mean[j] += row[j] * a;
        }
    }
    solve_lower_inplace(c.factor.lower, ks);
    return {std::move(ks), std::move(mean)};
}

} // namespace

GPPosterior posterior(const NormalizedObservations& obs, const GPParams& params, std::size_t grid_size) {
    GPPosterior post;
    post.grid = uniform_grid(grid_size);
    post.cov = kernel_matrix(post.grid, post.grid, params);
    if (obs.empty()) {
        post.mean.assign(grid_size, params.mean);
        return post;
    }
    auto terms = cross_terms(obs, params, post.grid);
    post.mean = std::move(terms.mean);
    const Matrix& v = terms.v;
    for (std::size_t i = 0; i < v.rows(); ++i) {
        const auto vi = v.row(i);
        for (std::size_t a = 0; a < grid_size; ++a) {
            const double va = vi[a];
            auto ca = post.cov.row(a);
            for (std::size_t b = a; b < grid_size; ++b) {
                ca[b] -= va * vi[b];
            }
        }
    }
    for (std::size_t a = 0; a < grid_size; ++a) {
        post.cov(a, a) = std::max(post.cov(a, a), 0.0);
        for (std::size_t b = a + 1; b < grid_size; ++b) {
            post.cov(b, a) = post.cov(a, b);
        }
    }
    return post;
}

EndpointContrast endpoint_contrast(const NormalizedObservations& obs, const GPParams& params, std::size_t grid_size) {
    EndpointContrast out;
    out.grid = uniform_grid(grid_size);
    const std::size_t last = grid_size - 1;
    const double var = std::exp(2.0 * params.log_signal_std);
    const double scale = -0.5 / (kLengthScale * kLengthScale);

    // Prior variance of f(x) - f(1): 2 sf^2 (1 - k(x, 1) / sf^2).
    out.contrast_var.resize(grid_size);
    for (std::size_t j = 0; j < grid_size; ++j) {
        const double d = out.grid[j] - 1.0;
        out.contrast_var[j] = -2.0 * var * std::expm1(scale * d * d);
    }
    if (obs.empty()) {
        out.mean.assign(grid_size, params.mean);
        return out;
    }
    auto terms = cross_terms(obs, params, out.grid);
    out.mean = std::move(terms.mean);
    const Matrix& v = terms.v;
    std::vector<double> reduction(grid_size, 0.0);
    for (std::size_t i = 0; i < v.rows(); ++i) {
        const auto vi = v.row(i);
        const double vl = vi[last];
        for (std::size_t j = 0; j < grid_size; ++j) {
            const double d = vi[j] - vl;
            reduction[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < grid_size; ++j) {
        out.contrast_var[j] = std::max(out.contrast_var[j] - reduction[j], 0.0);
    }
    return out;
}

double p_min(std::span<const double> mean, std::span<const double> contrast_var) {
    if (mean.size() < 2 || contrast_var.size() != mean.size()) {
        throw PreconditionError("p_min: need a grid of at least 2 points ending at x = 1");
    }
    const std::size_t last = mean.size() - 1;
    const double end_mean = mean[last];
    double best = 0.0;
    for (std::size_t j = 0; j < last; ++j) {
        const double mu = mean[j] - end_mean;
        const double var = contrast_var[j];
        double p = 0.0;
        if (var <= 1e-12) {
            p = mu < 0.0 ? 1.0 : 0.0;
        } else {
            p = normal_cdf(-mu / std::sqrt(var));
        }
        best = std::max(best, p);
    }
    return best;
}

double p_min(const EndpointContrast& post) {
    return p_min(post.mean, post.contrast_var);
}

double p_min(const GPPosterior& post) {
    if (post.grid.empty() || post.grid.back() != 1.0) {
        throw PreconditionError("p_min: posterior grid must end at x = 1");
    }
    const std::size_t n = post.grid.size();
    const std::size_t last = n - 1;
    std::vector<double> contrast(n);
    for (std::size_t j = 0; j < n; ++j) {
        contrast[j] = post.cov(j, j) + post.cov(last, last) - 2.0 * post.cov(j, last);
    }
    return p_min(post.mean, contrast);
}

double argmin_mean(std::span<const double> grid, std::span<const double> mean) {
    if (grid.empty() || grid.size() != mean.size()) {
        throw PreconditionError("argmin_mean: grid and mean must be non-empty and equal length");
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < mean.size(); ++j) {
        if (mean[j] < mean[best]) {
            best = j;
        }
    }
    return grid[best];
}

} // namespace autowu::gp
