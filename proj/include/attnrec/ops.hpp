#pragma once

#include <cmath>

#include "attnrec/matrix.hpp"

namespace attnrec {

constexpr double kL2NormEps = 1e-12;

// x -> x if x > 0 else slope * x. Subgradient at 0 is slope.
inline Matrix leaky_relu(const Matrix& x, double slope) {
    Matrix y = x;
    for (double& v : y.data)
        if (v <= 0.0) v *= slope;
    return y;
}

// dL/dx given dL/dy and the pre-activation input.
inline Matrix leaky_relu_backward(const Matrix& x, const Matrix& dy, double slope) {
    if (!x.same_shape(dy))
        throw DimensionError("leaky_relu_backward: " + shape_str(x) + " vs " + shape_str(dy));
    Matrix dx = dy;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x.data[i] <= 0.0) dx.data[i] *= slope;
    return dx;
}

// Row-wise softmax with max subtraction for overflow safety.
inline Matrix softmax_rows(const Matrix& x) {
    Matrix y(x.rows, x.cols);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(x.rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* xr = x.row_ptr(i);
        double* yr = y.row_ptr(i);
        double mx = xr[0];
        for (std::size_t j = 1; j < x.cols; ++j) mx = std::max(mx, xr[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        for (std::size_t j = 0; j < x.cols; ++j) yr[j] /= sum;
    }
    return y;
}

// dL/dx from dL/dy and the softmax output y: dx = y .* (dy - <dy, y>) per row.
inline Matrix softmax_rows_backward(const Matrix& y, const Matrix& dy) {
    if (!y.same_shape(dy))
        throw DimensionError("softmax_rows_backward: " + shape_str(y) + " vs " + shape_str(dy));
    Matrix dx(y.rows, y.cols);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(y.rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* yr = y.row_ptr(i);
        const double* dyr = dy.row_ptr(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols; ++j) dot += dyr[j] * yr[j];
        double* dxr = dx.row_ptr(i);
        for (std::size_t j = 0; j < y.cols; ++j) dxr[j] = yr[j] * (dyr[j] - dot);
    }
    return dx;
}

// Row-wise standardization to mean 0 / unit variance (population variance,
// plus eps under the square root). No learnable gain/bias here; the affine
// variant layers that on top.
inline Matrix layer_norm_rows(const Matrix& x, double eps) {
    if (x.cols < 2) throw DimensionError("layer_norm_rows: needs cols >= 2, got " + shape_str(x));
    Matrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xr = x.row_ptr(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) mean += xr[j];
        mean /= static_cast<double>(x.cols);
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = xr[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(x.cols);
        const double inv = 1.0 / std::sqrt(var + eps);
        double* yr = y.row_ptr(i);
        for (std::size_t j = 0; j < x.cols; ++j) yr[j] = (xr[j] - mean) * inv;
    }
    return y;
}

// dL/dx for the no-affine layer norm:
//   dx = inv_std * (dy - mean(dy) - y * mean(dy .* y))   per row
inline Matrix layer_norm_rows_backward(const Matrix& x, const Matrix& dy, double eps) {
    if (!x.same_shape(dy))
        throw DimensionError("layer_norm_rows_backward: " + shape_str(x) + " vs " + shape_str(dy));
    Matrix dx(x.rows, x.cols);
    const double n = static_cast<double>(x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xr = x.row_ptr(i);
        const double* dyr = dy.row_ptr(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) mean += xr[j];
        mean /= n;
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = xr[j] - mean;
            var += d * d;
        }
        var /= n;
        const double inv = 1.0 / std::sqrt(var + eps);
        double dy_mean = 0.0, dyy_mean = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double yj = (xr[j] - mean) * inv;
            dy_mean += dyr[j];
            dyy_mean += dyr[j] * yj;
        }
        dy_mean /= n;
        dyy_mean /= n;
        double* dxr = dx.row_ptr(i);
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double yj = (xr[j] - mean) * inv;
            dxr[j] = inv * (dyr[j] - dy_mean - yj * dyy_mean);
        }
    }
    return dx;
}

// Each row divided by max(||row||_2, eps). Zero rows stay zero.
inline Matrix l2_normalize_rows(const Matrix& x, double eps = kL2NormEps) {
    Matrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xr = x.row_ptr(i);
        double nrm = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) nrm += xr[j] * xr[j];
        nrm = std::sqrt(nrm);
        const double inv = 1.0 / std::max(nrm, eps);
        double* yr = y.row_ptr(i);
        for (std::size_t j = 0; j < x.cols; ++j) yr[j] = xr[j] * inv;
    }
    return y;
}

// dL/dx: for ||x|| > eps, dx = (dy - y <y, dy>) / ||x||; in the eps branch the
// map is linear with factor 1/eps.
inline Matrix l2_normalize_rows_backward(const Matrix& x, const Matrix& dy,
                                         double eps = kL2NormEps) {
    if (!x.same_shape(dy))
        throw DimensionError("l2_normalize_rows_backward: " + shape_str(x) + " vs " + shape_str(dy));
    Matrix dx(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xr = x.row_ptr(i);
        const double* dyr = dy.row_ptr(i);
        double nrm = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) nrm += xr[j] * xr[j];
        nrm = std::sqrt(nrm);
        double* dxr = dx.row_ptr(i);
        if (nrm > eps) {
            double dot = 0.0;
            for (std::size_t j = 0; j < x.cols; ++j) dot += xr[j] * dyr[j];
            dot /= nrm * nrm;  // <y, dy> / ||x||
            for (std::size_t j = 0; j < x.cols; ++j)
                dxr[j] = (dyr[j] - xr[j] * dot) / nrm;
        } else {
            for (std::size_t j = 0; j < x.cols; ++j) dxr[j] = dyr[j] / eps;
        }
    }
    return dx;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace attnrec
