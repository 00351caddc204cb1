#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace autowu {

// Dense row-major matrix of doubles. Small on purpose: it only has to carry
// Gram matrices, Cholesky factors and the weights of desk-scale models.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    // |A[i,j] - A[j,i]| <= rel_tol * max(1, |A[i,j]|) for all i, j.
    bool is_symmetric(double rel_tol = 1e-12) const;

    double max_abs() const;
    Matrix transpose() const;

    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend Matrix operator-(const Matrix& a, const Matrix& b);
    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct CholeskyFactor {
    Matrix lower;
    // Diagonal jitter actually added to reach a successful factorization.
    double jitter = 0.0;
};

// Factorizes a + jitter*I. On failure the jitter is raised to 1e-8 times the
// mean diagonal (or x10 if already larger) and escalated x10 until it would
// exceed 1e-2 times the mean diagonal, after which NotPositiveDefinite is
// thrown.
CholeskyFactor cholesky_factor(const Matrix& a, double jitter = 0.0);
Matrix cholesky(const Matrix& a, double jitter = 0.0);

// In-place solves with a lower-triangular factor. The multi-RHS variants
// treat each column of `b` as a right-hand side.
void solve_lower_inplace(const Matrix& lower, std::span<double> b);
void solve_lower_transposed_inplace(const Matrix& lower, std::span<double> b);
void solve_lower_inplace(const Matrix& lower, Matrix& b);

// x = A^{-1} b given A = L L^T.
std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b);

// Inverse of a lower-triangular matrix (also lower-triangular).
Matrix invert_lower(const Matrix& lower);

double normal_cdf(double z);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// Random stream with a pinned algorithm (std::mt19937_64, whose output
// sequence is fixed by the C++ standard). Every derived variate is computed
// here rather than through std:: distributions, whose algorithms are
// implementation-defined.
class Rng {
public:
    static constexpr std::string_view kAlgorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
    std::uint64_t uniform_below(std::uint64_t n);
    // Standard normal via Box-Muller.
    double normal();
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

// splitmix64 finalizer over (a, b); used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// k distinct indices from [0, population), sorted ascending. Uses Floyd's
// algorithm so the cost depends on k, not on the population size. When
// k == population the identity list is returned without consuming the stream.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t population, std::size_t k);

// Fisher-Yates shuffle driven by Rng::uniform_below.
void shuffle(Rng& rng, std::span<std::size_t> values);

} // namespace autowu
