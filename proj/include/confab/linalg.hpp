#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "confab/errors.hpp"
#include "confab/rng.hpp"

namespace confab {

using Vec = std::vector<double>;

// Row-major dense matrix. Small and deliberately minimal: the library only
// needs matvec products, Cholesky solves, and a power iteration.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Mat& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm1(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += std::fabs(x);
    return acc;
}

inline double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc = std::max(acc, std::fabs(x));
    return acc;
}

// y = A x
inline Vec matvec(const Mat& a, std::span<const double> x) {
    Vec y(a.rows(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
    return y;
}

// y = A^T x
inline Vec matvec_transposed(const Mat& a, std::span<const double> x) {
    Vec y(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        const double xr = x[r];
        for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * xr;
    }
    return y;
}

// Angle between two vectors via clamped arccos of the cosine similarity,
// in radians in [0, pi]. A zero vector has no direction: the angle is
// reported as 0 and *degenerate is set.
inline double angle_between(std::span<const double> u, std::span<const double> v,
                            bool* degenerate = nullptr) {
    const double nu = norm2(u);
    const double nv = norm2(v);
    if (nu == 0.0 || nv == 0.0) {
        if (degenerate != nullptr) *degenerate = true;
        return 0.0;
    }
    double cosine = dot(u, v) / (nu * nv);
    cosine = std::min(1.0, std::max(-1.0, cosine));
    return std::acos(cosine);
}

// Cholesky factorization A = L L^T for symmetric positive definite A.
// Returns the lower factor, or nullopt when A is not positive definite.
inline std::optional<Mat> cholesky(const Mat& a) {
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n) return std::nullopt;
    Mat l(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a(i, j);
            for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
            if (i == j) {
                if (sum <= 0.0 || !std::isfinite(sum)) return std::nullopt;
                l(i, i) = std::sqrt(sum);
            } else {
                l(i, j) = sum / l(j, j);
            }
        }
    }
    return l;
}

// Solves L L^T x = b given the lower Cholesky factor.
inline Vec cholesky_solve(const Mat& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    Vec y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= l(i, k) * y[k];
        y[i] = sum / l(i, i);
    }
    Vec x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) sum -= l(k, ii) * x[k];
        x[ii] = sum / l(ii, ii);
    }
    return x;
}

struct SpectralNormResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Largest singular value of A by power iteration on A^T A with a seeded start
// vector. Throws NumericalError when the iteration does not converge.
inline SpectralNormResult spectral_norm_power_iteration(const Mat& a, double tol = 1e-8,
                                                        int max_iterations = 10000,
                                                        std::uint64_t seed = 0x5eedull) {
    const std::size_t n = a.cols();
    if (n == 0 || a.rows() == 0) return {0.0, 0, true};

    Rng rng(seed);
    Vec v(n);
    for (double& x : v) x = rng.normal();
    double vnorm = norm2(v);
    if (vnorm == 0.0) {
        v.assign(n, 0.0);
        v[0] = 1.0;
        vnorm = 1.0;
    }
    for (double& x : v) x /= vnorm;

    double estimate = 0.0;
    for (int it = 1; it <= max_iterations; ++it) {
        Vec av = matvec(a, v);
        const double sigma = norm2(av);
        if (sigma == 0.0) return {0.0, it, true};
        Vec w = matvec_transposed(a, av);
        const double wnorm = norm2(w);
        if (wnorm == 0.0) return {sigma, it, true};
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wnorm;
        if (std::fabs(sigma - estimate) <= tol * std::max(1.0, sigma)) {
            return {sigma, it, true};
        }
        estimate = sigma;
    }
    throw NumericalError("spectral norm power iteration did not converge after " +
                         std::to_string(max_iterations) + " iterations");
}

} // namespace confab
