#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "attnrec/errors.hpp"

namespace attnrec {

// Dense row-major matrix of doubles. All numeric code in the project runs on
// 64-bit floats with fixed summation order, so results are bit-stable across
// runs and thread counts.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

// C = A * B with fixed i-k-j loop order: each C(i,j) accumulates over k in
// ascending order, so parallelizing over rows cannot change a single bit.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw DimensionError("matmul: " + shape_str(a) + " * " + shape_str(b));
    Matrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(a.rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;  // rating and one-hot inputs are mostly zero
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

// A * B^T without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw DimensionError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
    Matrix c(a.rows, b.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(a.rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* arow = a.row_ptr(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            c(i, j) = s;
        }
    }
    return c;
}

// A^T * B without materializing the transpose (column count of A becomes rows).
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw DimensionError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
    Matrix c(a.cols, b.cols);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(a.cols); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        double* crow = c.row_ptr(j);
        for (std::size_t k = 0; k < a.rows; ++k) {
            const double ajk = a(k, j);
            if (ajk == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t i = 0; i < b.cols; ++i) crow[i] += ajk * brow[i];
        }
    }
    return c;
}

inline void add_row_vector_inplace(Matrix& m, const Matrix& bias) {
    if (bias.rows != 1 || bias.cols != m.cols)
        throw DimensionError("add_row_vector: " + shape_str(m) + " + " + shape_str(bias));
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* r = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) r[j] += bias.data[j];
    }
}

// Column sums as a 1 x cols matrix (bias gradients).
inline Matrix col_sums(const Matrix& m) {
    Matrix s(1, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* r = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) s.data[j] += r[j];
    }
    return s;
}

inline void axpy_inplace(Matrix& y, double a, const Matrix& x) {
    if (!y.same_shape(x))
        throw DimensionError("axpy: " + shape_str(y) + " vs " + shape_str(x));
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += a * x.data[i];
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw DimensionError("hadamard: " + shape_str(a) + " vs " + shape_str(b));
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= b.data[i];
    return c;
}

inline Matrix scaled(const Matrix& a, double s) {
    Matrix c = a;
    for (double& v : c.data) v *= s;
    return c;
}

}  // namespace attnrec
