// matrix.hpp — dense row-major double matrices and the scalar nonlinearities
// shared by every other header. All arithmetic is 64-bit: the gradient checks
// need the precision headroom.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crosshash {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool empty() const { return rows == 0 || cols == 0; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool operator==(const Matrix& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

inline std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: incompatible shapes " + shape_string(a) +
                                    " and " + shape_string(b));
    Matrix out(a.rows, b.cols);
    // ikj order: streams over contiguous rows of b and out.
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* out_row = out.data.data() + i * out.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.data[i * a.cols + k];
            const double* b_row = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

// a^T * b without materializing the transpose; used on gradient hot paths.
inline Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_at: incompatible shapes " + shape_string(a) +
                                    " and " + shape_string(b));
    Matrix out(a.cols, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* a_row = a.data.data() + i * a.cols;
        const double* b_row = b.data.data() + i * b.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a_row[k];
            double* out_row = out.data.data() + k * out.cols;
            for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

// Largest double strictly below 1; tanh outputs are clamped to ±this so the
// (-1, 1) range contract survives saturation (std::tanh(50) rounds to 1.0).
inline constexpr double kTanhCeiling = 1.0 - 1e-16;

inline double tanh_clamped(double x) {
    double t = std::tanh(x);
    if (t > kTanhCeiling) return kTanhCeiling;
    if (t < -kTanhCeiling) return -kTanhCeiling;
    return t;
}

inline Matrix tanh_elementwise(const Matrix& m) {
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = tanh_clamped(m.data[i]);
    return out;
}

// Stable logistic: never evaluates exp on a positive argument.
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + e^x), same stable branching.
inline double softplus(double x) {
    if (x >= 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("squared_distance: length mismatch " +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return acc;
}

inline double gaussian_kernel(std::span<const double> a, std::span<const double> b,
                              double gamma) {
    if (gamma <= 0.0)
        throw std::invalid_argument("gaussian_kernel: gamma must be positive, got " +
                                    std::to_string(gamma));
    return std::exp(-gamma * squared_distance(a, b));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("dot: length mismatch " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc;
}

}  // namespace crosshash
