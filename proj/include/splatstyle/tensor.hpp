// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "splatstyle/error.hpp"
#include "splatstyle/rng.hpp"

namespace splatstyle {

// Dense row-major matrix of doubles. Small helper for token grids and
// denoiser weights; not a general linear algebra library.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    Mat& operator+=(const Mat& o) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        return *this;
    }
    Mat operator+(const Mat& o) const {
        Mat r = *this;
        r += o;
        return r;
    }
    Mat operator*(double s) const {
        Mat r = *this;
        for (double& x : r.v) x *= s;
        return r;
    }

    static Mat seeded_normal(int r, int c, std::uint64_t seed, double stddev) {
        Mat m(r, c);
        Rng rng(seed);
        for (double& x : m.v) x = rng.normal() * stddev;
        return m;
    }
};

// a (m x k) * b (k x n) -> (m x n)
inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw Error(ErrorCode::DimensionMismatch, "matmul shape mismatch");
    Mat r(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

// a (m x k) * b^T (n x k) -> (m x n)
inline Mat matmul_bt(const Mat& a, const Mat& b) {
    if (a.cols != b.cols) throw Error(ErrorCode::DimensionMismatch, "matmul_bt shape mismatch");
    Mat r(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double s = 0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
            r(i, j) = s;
        }
    return r;
}

// Per-row RMS normalization, smooth and parameter-free.
inline Mat rms_norm(const Mat& a, double eps = 1e-8) {
    Mat r(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        double ss = 0;
        for (int j = 0; j < a.cols; ++j) ss += a(i, j) * a(i, j);
        const double scale = 1.0 / std::sqrt(ss / a.cols + eps);
        for (int j = 0; j < a.cols; ++j) r(i, j) = a(i, j) * scale;
    }
    return r;
}

inline bool all_finite(const Mat& a) {
    for (double x : a.v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace splatstyle
