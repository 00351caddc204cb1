#pragma once

#include "autowu/numerics.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace autowu::gp {

inline constexpr double kLengthScale = 0.2;
inline constexpr std::size_t kDefaultGridSize = 500;
inline constexpr std::size_t kFitSteps = 100;
inline constexpr double kFitLearningRate = 0.01;

// Constant-mean GP with a squared-exponential kernel of fixed length-scale.
// The two scales are stored as logarithms so any value is a valid model.
struct GPParams {
    double mean = 0.0;
    double log_signal_std = 0.0;
    double log_noise_std = -2.302585092994046; // log(0.1)

    static GPParams from_stds(double mean, double signal_std, double noise_std);

    double signal_std() const;
    double noise_std() const;
    static constexpr double length_scale() { return kLengthScale; }
};

// Loss observations with steps rescaled to [0, 1]. xs must be sorted
// (ties are allowed; they only make the Gram matrix singular, which the
// Cholesky jitter ladder absorbs).
class NormalizedObservations {
public:
    NormalizedObservations() = default;
    NormalizedObservations(std::vector<double> xs, std::vector<double> ys);

    std::span<const double> xs() const noexcept { return xs_; }
    std::span<const double> ys() const noexcept { return ys_; }
    std::size_t size() const noexcept { return xs_.size(); }
    bool empty() const noexcept { return xs_.empty(); }

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

// Predictive distribution of the latent f on a grid over [0, 1].
struct GPPosterior {
    std::vector<double> grid;
    std::vector<double> mean;
    Matrix cov;
};

// Reduced posterior for the end-of-trajectory test: the mean on the grid and
// the variance of f(x) - f(1) at each grid point. Carries exactly what the
// minimum-probability statistic needs without forming the grid covariance.
struct EndpointContrast {
    std::vector<double> grid;
    std::vector<double> mean;
    std::vector<double> contrast_var;
};

struct LogMarginalLikelihood {
    double value = 0.0;
    // Partial derivatives with respect to (mean, log signal_std, log noise_std).
    std::array<double, 3> gradient{};
};

std::vector<double> uniform_grid(std::size_t size);

Matrix kernel_matrix(std::span<const double> xs_a, std::span<const double> xs_b, const GPParams& params);

LogMarginalLikelihood log_marginal_likelihood(const NormalizedObservations& obs, const GPParams& params);

// Scale-aware start used by fit(): mean(ys), std(ys) floored at 1e-4 and a
// tenth of that for the noise.
GPParams initial_params(const NormalizedObservations& obs);

// 100 Adam steps (lr 0.01) ascending the log marginal likelihood over
// (mean, log signal_std, log noise_std). Throws FitDiverged when the
// objective stops being finite.
GPParams fit(const NormalizedObservations& obs);

GPPosterior posterior(const NormalizedObservations& obs, const GPParams& params,
                      std::size_t grid_size = kDefaultGridSize);

EndpointContrast endpoint_contrast(const NormalizedObservations& obs, const GPParams& params,
                                   std::size_t grid_size = kDefaultGridSize);

// max over grid points x < 1 of P(f(x) < f(1)).
double p_min(const GPPosterior& post);
double p_min(const EndpointContrast& post);
double p_min(std::span<const double> mean, std::span<const double> contrast_var);

// Grid point of minimal posterior mean; ties go to the smallest x.
double argmin_mean(std::span<const double> grid, std::span<const double> mean);
inline double argmin_mean(const GPPosterior& post) { return argmin_mean(post.grid, post.mean); }
inline double argmin_mean(const EndpointContrast& post) { return argmin_mean(post.grid, post.mean); }

} // namespace autowu::gp
