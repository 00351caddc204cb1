#include "autowu/numerics.hpp"

#include "autowu/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_set>

namespace autowu {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw PreconditionError("Matrix: ragged initializer list");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

bool Matrix::is_symmetric(double rel_tol) const {
    if (!is_square()) {
        return false;
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = i + 1; j < cols_; ++j) {
            const double a = (*this)(i, j);
            if (std::abs(a - (*this)(j, i)) > rel_tol * std::max(1.0, std::abs(a))) {
                return false;
            }
        }
    }
    return true;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            t(j, i) = (*this)(i, j);
        }
    }
    return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) {
        throw ShapeMismatch("Matrix product: inner dimensions differ");
    }
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
        auto out = c.row(i);
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const double aik = a(i, k);
            const auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols_; ++j) {
                out[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) {
        throw ShapeMismatch("Matrix difference: shapes differ");
    }
    Matrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) {
        c.data_[i] -= b.data_[i];
    }
    return c;
}

namespace {

// Returns false (leaving `lower` partially written) when a pivot is not
// strictly positive.
bool try_cholesky(const Matrix& a, double jitter, Matrix& lower) {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        const auto lj = lower.row(j);
        double diag = a(j, j) + jitter;
        for (std::size_t k = 0; k < j; ++k) {
            diag -= lj[k] * lj[k];
        }
        if (!(diag > 0.0) || !std::isfinite(diag)) {
            return false;
        }
        const double ljj = std::sqrt(diag);
        lj[j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            const auto li = lower.row(i);
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                s -= li[k] * lj[k];
            }
            li[j] = s / ljj;
        }
    }
    return true;
}

} // namespace

CholeskyFactor cholesky_factor(const Matrix& a, double jitter) {
    if (!a.is_square()) {
        throw PreconditionError("cholesky: matrix is not square");
    }
    if (!a.is_symmetric()) {
        throw PreconditionError("cholesky: matrix is not symmetric");
    }
    if (jitter < 0.0) {
        throw PreconditionError("cholesky: jitter must be non-negative");
    }
    const std::size_t n = a.rows();
    Matrix lower(n, n);
    if (try_cholesky(a, jitter, lower)) {
        return {std::move(lower), jitter};
    }

    double mean_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_diag += std::abs(a(i, i));
    }
    mean_diag = n == 0 ? 1.0 : std::max(mean_diag / static_cast<double>(n), 1e-300);

    const double cap = 1e-2 * mean_diag;
    double next = std::max(1e-8 * mean_diag, jitter * 10.0);
    while (next <= cap * (1.0 + 1e-12)) {
        std::fill(lower.data().begin(), lower.data().end(), 0.0);
        if (try_cholesky(a, next, lower)) {
            return {std::move(lower), next};
        }
        next *= 10.0;
    }
    throw NotPositiveDefinite("cholesky: factorization failed with jitter up to " + std::to_string(cap));
}

Matrix cholesky(const Matrix& a, double jitter) {
    return cholesky_factor(a, jitter).lower;
}

void solve_lower_inplace(const Matrix& lower, std::span<double> b) {
    const std::size_t n = lower.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const auto li = lower.row(i);
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) {
            s -= li[k] * b[k];
        }
        b[i] = s / li[i];
    }
}

void solve_lower_transposed_inplace(const Matrix& lower, std::span<double> b) {
    const std::size_t n = lower.rows();
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) {
            s -= lower(k, ii) * b[k];
        }
        b[ii] = s / lower(ii, ii);
    }
}

void solve_lower_inplace(const Matrix& lower, Matrix& b) {
    const std::size_t n = lower.rows();
    const std::size_t m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const auto li = lower.row(i);
        auto bi = b.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = li[k];
            if (lik == 0.0) {
                continue;
            }
            const auto bk = b.row(k);
            for (std::size_t j = 0; j < m; ++j) {
                bi[j] -= lik * bk[j];
            }
        }
        const double inv = 1.0 / li[i];
        for (std::size_t j = 0; j < m; ++j) {
            bi[j] *= inv;
        }
    }
}

std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b) {
    std::vector<double> x(b.begin(), b.end());
    solve_lower_inplace(lower, std::span<double>(x));
    solve_lower_transposed_inplace(lower, std::span<double>(x));
    return x;
}

Matrix invert_lower(const Matrix& lower) {
    const std::size_t n = lower.rows();
    Matrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto li = lower.row(i);
        auto xi = inv.row(i);
        xi[i] = 1.0;
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = li[k];
            const auto xk = inv.row(k);
            for (std::size_t j = 0; j <= k; ++j) {
                xi[j] -= lik * xk[j];
            }
        }
        const double d = 1.0 / li[i];
        for (std::size_t j = 0; j <= i; ++j) {
            xi[j] *= d;
        }
    }
    return inv;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    if (n == 0) {
        throw PreconditionError("Rng::uniform_below: n must be positive");
    }
    // Largest multiple of n representable; draws at or above it are rejected.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % n;
}

double Rng::normal() {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t population, std::size_t k) {
    if (k > population) {
        throw KTooLarge("sample_without_replacement: k=" + std::to_string(k) + " exceeds population=" +
                        std::to_string(population));
    }
    std::vector<std::size_t> out;
    out.reserve(k);
    if (k == population) {
        out.resize(k);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(2 * k);
    for (std::size_t j = population - k; j < population; ++j) {
        const auto t = static_cast<std::size_t>(rng.uniform_below(j + 1));
        const std::size_t pick = chosen.contains(t) ? j : t;
        chosen.insert(pick);
        out.push_back(pick);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void shuffle(Rng& rng, std::span<std::size_t> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(values[i - 1], values[j]);
    }
}

} // namespace autowu
